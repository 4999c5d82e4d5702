#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "pratyaya/cli.hpp"
#include "tests/support/paths.hpp"
#include "tests/support/toy_grammar.hpp"

using namespace pratyaya;

namespace {

struct cli_result {
  int exit_code;
  std::string out;
  std::string err;
};

cli_result run_cli(std::vector<std::string> args, const std::string& stdin_text = "") {
  std::istringstream in(stdin_text);
  std::ostringstream out, err;
  int code = cli::run(std::move(args), in, out, err);
  return {code, out.str(), err.str()};
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

// One toy corpus + one trained checkpoint shared by the tests below.
struct fixture {
  std::string corpus_path = "cli_toy_corpus.tsv";
  std::string checkpoint_path = "cli_toy_model.pksq";

  fixture() {
    auto records = tests::toy_corpus(160, 99);
    std::ofstream out(corpus_path, std::ios::binary);
    for (const auto& r : records) {
      out << r.stem << '\t' << r.suffix_name << '\t' << r.pada << "\tkrit\n";
    }
    out.close();

    auto train = run_cli({"train", "--corpus", corpus_path, "--category", "krit",
                          "--direction", "formation", "--seed", "7", "--epochs", "2",
                          "--latent-dim", "12", "--batch-size", "16", "--keep-all-suffixes",
                          "--checkpoint", checkpoint_path});
    REQUIRE(train.exit_code == 0);
  }

  ~fixture() {
    std::remove(corpus_path.c_str());
    std::remove(checkpoint_path.c_str());
    std::remove((checkpoint_path + ".history.tsv").c_str());
  }
};

fixture& shared_fixture() {
  static fixture f;
  return f;
}

}  // namespace

TEST_CASE("train writes a checkpoint and a history file") {
  auto& f = shared_fixture();
  CHECK(read_file(f.checkpoint_path).substr(0, 4) == "PKSQ");
  auto history = read_file(f.checkpoint_path + ".history.tsv");
  CHECK(history.find("# epoch\ttrain_loss\tvalidation_loss\n") == 0);
  CHECK(history.find("\n1\t") != std::string::npos);
  CHECK(history.find("\n2\t") != std::string::npos);
}

TEST_CASE("train reruns are byte-identical under the same seed") {
  auto& f = shared_fixture();
  auto again = run_cli({"train", "--corpus", f.corpus_path, "--category", "krit",
                        "--direction", "formation", "--seed", "7", "--epochs", "2",
                        "--latent-dim", "12", "--batch-size", "16", "--keep-all-suffixes",
                        "--checkpoint", "cli_toy_again.pksq"});
  REQUIRE(again.exit_code == 0);
  CHECK(read_file("cli_toy_again.pksq") == read_file(f.checkpoint_path));
  std::remove("cli_toy_again.pksq");
  std::remove("cli_toy_again.pksq.history.tsv");
}

TEST_CASE("missing corpus path exits 2 and names the path") {
  auto result = run_cli({"train", "--corpus", "no_such_corpus.tsv", "--checkpoint", "x.pksq"});
  CHECK(result.exit_code == 2);
  CHECK(result.err.find("no_such_corpus.tsv") != std::string::npos);
}

TEST_CASE("usage errors exit 2") {
  CHECK(run_cli({"train"}).exit_code == 2);                 // missing required options
  CHECK(run_cli({"unknown-subcommand"}).exit_code == 2);
  CHECK(run_cli({}).exit_code == 2);                        // subcommand required
  CHECK(run_cli({"--help"}).exit_code == 0);
}

TEST_CASE("predict maps stdin lines to stdout lines") {
  auto& f = shared_fixture();

  auto empty = run_cli({"predict", "--checkpoint", f.checkpoint_path}, "");
  CHECK(empty.exit_code == 0);
  CHECK(empty.out.empty());

  auto two = run_cli({"predict", "--checkpoint", f.checkpoint_path}, "kena+ti\nkan+tra\n");
  CHECK(two.exit_code == 0);
  CHECK(std::count(two.out.begin(), two.out.end(), '\n') == 2);

  // per-line errors do not abort the batch
  auto mixed = run_cli({"predict", "--checkpoint", f.checkpoint_path}, "kena+ti\nZZZ\nkan+tra\n");
  CHECK(mixed.exit_code == 0);
  CHECK(std::count(mixed.out.begin(), mixed.out.end(), '\n') == 3);
  CHECK(mixed.err.find("line 2") != std::string::npos);
}

TEST_CASE("predict --itrans converts the input first") {
  auto& f = shared_fixture();
  // ITRANS "kena" is SLP1 "kena"; exercise a digraph to prove conversion
  auto result = run_cli({"predict", "--checkpoint", f.checkpoint_path, "--itrans"},
                        "kena+ti\n");
  CHECK(result.exit_code == 0);
  CHECK(std::count(result.out.begin(), result.out.end(), '\n') == 1);
}

TEST_CASE("evaluate reports on the held-out partition") {
  auto& f = shared_fixture();
  auto result = run_cli({"evaluate", "--checkpoint", f.checkpoint_path, "--corpus",
                         f.corpus_path, "--report", "cli_report.txt", "--report-kv",
                         "cli_report.kv"});
  CHECK(result.exit_code == 0);
  CHECK(result.out.find("task: krit formation") != std::string::npos);
  CHECK(result.out.find("/ 32 (") != std::string::npos);  // 160 * 0.2 held out
  auto kv = read_file("cli_report.kv");
  CHECK(kv.find("total=32") != std::string::npos);
  CHECK(read_file("cli_report.txt").find("this run") != std::string::npos);
  std::remove("cli_report.txt");
  std::remove("cli_report.kv");
}

TEST_CASE("evaluate refuses a mismatched split request") {
  auto& f = shared_fixture();
  auto wrong_seed = run_cli({"evaluate", "--checkpoint", f.checkpoint_path, "--corpus",
                             f.corpus_path, "--seed", "8"});
  CHECK(wrong_seed.exit_code == 2);
  CHECK(wrong_seed.err.find("seed") != std::string::npos);
  CHECK(wrong_seed.out.find("task:") == std::string::npos);  // no report

  auto wrong_fraction = run_cli({"evaluate", "--checkpoint", f.checkpoint_path, "--corpus",
                                 f.corpus_path, "--fraction", "0.5"});
  CHECK(wrong_fraction.exit_code == 2);

  // a corpus edit that changes the record count also trips the guard
  std::string edited = "cli_toy_edited.tsv";
  std::ofstream out(edited, std::ios::binary);
  out << read_file(f.corpus_path) << "zzz\tti\tzzzti\tkrit\n";
  out.close();
  auto wrong_corpus = run_cli({"evaluate", "--checkpoint", f.checkpoint_path, "--corpus",
                               edited});
  CHECK(wrong_corpus.exit_code == 2);
  CHECK(wrong_corpus.err.find("161") != std::string::npos);
  std::remove(edited.c_str());
}

TEST_CASE("evaluate enforces the accuracy floor") {
  auto& f = shared_fixture();
  auto result = run_cli({"evaluate", "--checkpoint", f.checkpoint_path, "--corpus",
                         f.corpus_path, "--min-accuracy", "1.01"});
  CHECK(result.exit_code == 1);  // 2-epoch model cannot clear an impossible floor
}

TEST_CASE("stats prints per-suffix counts") {
  auto result = run_cli({"stats", "--corpus", tests::data_file("sample_corpus.tsv")});
  CHECK(result.exit_code == 0);
  CHECK(result.out.find("lyuw") != std::string::npos);
  CHECK(result.out.find("total       8") != std::string::npos);

  auto machine = run_cli({"stats", "--corpus", tests::data_file("sample_corpus.tsv"),
                          "--machine"});
  CHECK(machine.out.find("krit.total=8\n") != std::string::npos);
  CHECK(machine.out.find("taddhit.total=4\n") != std::string::npos);

  std::ofstream empty("cli_empty.tsv", std::ios::binary);
  empty.close();
  auto zero = run_cli({"stats", "--corpus", "cli_empty.tsv", "--machine"});
  CHECK(zero.out.find("krit.total=0\n") != std::string::npos);
  std::remove("cli_empty.tsv");
}

TEST_CASE("translit filters stdin line by line") {
  auto ok = run_cli({"translit", "--direction", "itrans-slp1"}, "shiva\npaTh+tavya\n");
  CHECK(ok.exit_code == 0);
  CHECK(ok.out == "Siva\npaW+tavya\n");

  auto back = run_cli({"translit", "--direction", "slp1-itrans"}, "Siva\n");
  CHECK(back.out == "shiva\n");

  auto bad = run_cli({"translit", "--direction", "itrans-slp1"}, "shiva\nq#q\n");
  CHECK(bad.exit_code == 1);
  CHECK(bad.out == "Siva\n\n");
  CHECK(bad.err.find("line 2") != std::string::npos);

  CHECK(run_cli({"translit", "--direction", "sideways"}).exit_code == 2);
}

TEST_CASE("config file values apply under flag precedence") {
  auto& f = shared_fixture();
  std::ofstream config("cli_config.ini", std::ios::binary);
  config << "corpus=" << f.corpus_path << "\n";
  config << "category=krit\n";
  config << "direction=formation\n";
  config << "keep-all-suffixes=true\n";
  config << "seed=7\n";
  config << "epochs=1\n";
  config << "latent-dim=12\n";
  config << "batch-size=16\n";
  config << "checkpoint=cli_from_config.pksq\n";
  config.close();

  // file value: 1 epoch
  auto from_file = run_cli({"train", "--config", "cli_config.ini"});
  REQUIRE(from_file.exit_code == 0);
  auto history = read_file("cli_from_config.pksq.history.tsv");
  CHECK(history.find("\n1\t") != std::string::npos);
  CHECK(history.find("\n2\t") == std::string::npos);

  // flag overrides file: 2 epochs
  auto flag_wins = run_cli({"train", "--config", "cli_config.ini", "--epochs", "2"});
  REQUIRE(flag_wins.exit_code == 0);
  history = read_file("cli_from_config.pksq.history.tsv");
  CHECK(history.find("\n2\t") != std::string::npos);

  std::remove("cli_config.ini");
  std::remove("cli_from_config.pksq");
  std::remove("cli_from_config.pksq.history.tsv");
}
