#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>

#include "pratyaya/checkpoint.hpp"
#include "pratyaya/cli.hpp"
#include "pratyaya/corpus.hpp"
#include "pratyaya/eval.hpp"
#include "pratyaya/seq2seq.hpp"
#include "pratyaya/translit.hpp"

namespace py = pybind11;
using namespace pratyaya;

namespace {

// A trained model plus everything needed to run it: config, vocabulary
// and provenance metadata. What save()/load() move around.
struct py_model {
  seq2seq::checkpoint data;

  std::string predict_formation(const std::string& stem, const std::string& suffix) const {
    return seq2seq::predict_formation(data.params, data.config, data.vocab, stem, suffix);
  }

  py::tuple predict_split(const std::string& pada) const {
    auto p = seq2seq::predict_split(data.params, data.config, data.vocab, pada);
    return py::make_tuple(p.stem, p.suffix_name, p.malformed);
  }

  std::string predict_string(const std::string& source) const {
    return seq2seq::predict_string(data.params, data.config, data.vocab, source);
  }

  void save(const std::string& path) const { seq2seq::save_checkpoint(path, data); }
};

corpus::task_direction direction_arg(const std::string& text) {
  return corpus::direction_from_string(text);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Sanskrit derivative-noun formation and splitting";

  py::register_exception<pratyaya::error>(m, "PratyayaError");

  m.def("default_data_dir", &cli::default_data_dir,
        "Directory holding itrans_slp1.tsv and friends (PRATYAYA_DATA overrides)");

  // ---------------------------------------------------------------- translit
  py::class_<translit::transliteration_table>(m, "TransliterationTable")
      .def_static("load", &translit::transliteration_table::load, py::arg("path"))
      .def_property_readonly("longest_token", &translit::transliteration_table::longest_token)
      .def("is_slp1_char",
           [](const translit::transliteration_table& t, const std::string& c) {
             return c.size() == 1 && t.is_slp1_char(c[0]);
           });

  m.def("itrans_to_slp1", &translit::itrans_to_slp1, py::arg("table"), py::arg("itrans"));
  m.def("slp1_to_itrans", &translit::slp1_to_itrans, py::arg("table"), py::arg("slp1"));
  m.def(
      "validate_slp1",
      [](const translit::transliteration_table& table, const std::string& text,
         bool allow_control) {
        py::list out;
        for (const auto& v : translit::validate_slp1(table, text, allow_control)) {
          out.append(py::make_tuple(v.position, std::string(1, v.character)));
        }
        return out;
      },
      py::arg("table"), py::arg("text"), py::arg("allow_control") = false);
  m.def("convert_line", &translit::convert_line, py::arg("table"), py::arg("line"),
        py::arg("to_slp1"));

  // ------------------------------------------------------------------ corpus
  py::class_<corpus::derivation_record>(m, "DerivationRecord")
      .def(py::init([](const std::string& stem, const std::string& suffix_name,
                       const std::string& pada, const std::string& category) {
             return corpus::derivation_record{stem, suffix_name, pada,
                                              corpus::category_from_string(category)};
           }),
           py::arg("stem"), py::arg("suffix_name"), py::arg("pada"), py::arg("category"))
      .def_readonly("stem", &corpus::derivation_record::stem)
      .def_readonly("suffix_name", &corpus::derivation_record::suffix_name)
      .def_readonly("pada", &corpus::derivation_record::pada)
      .def_property_readonly("category",
                             [](const corpus::derivation_record& r) {
                               return corpus::to_string(r.category);
                             })
      .def("__repr__", [](const corpus::derivation_record& r) {
        return "DerivationRecord(" + r.stem + "+" + r.suffix_name + " -> " + r.pada + ", " +
               corpus::to_string(r.category) + ")";
      });

  py::class_<corpus::vocabulary>(m, "Vocabulary")
      .def_property_readonly("size", &corpus::vocabulary::size)
      .def_property_readonly("chars",
                             [](const corpus::vocabulary& v) { return v.index_to_char; })
      .def("index_of",
           [](const corpus::vocabulary& v, const std::string& c) {
             if (c.size() != 1) throw corpus::unknown_character(c.empty() ? '?' : c[0]);
             return v.index_of(c[0]);
           })
      .def("char_at", [](const corpus::vocabulary& v, int i) {
        return std::string(1, v.char_at(i));
      });

  py::class_<corpus::encoded_pair>(m, "EncodedPair")
      .def_readonly("source_indices", &corpus::encoded_pair::source_indices)
      .def_readonly("target_indices", &corpus::encoded_pair::target_indices)
      .def_property_readonly("direction", [](const corpus::encoded_pair& p) {
        return corpus::to_string(p.direction);
      });

  py::class_<corpus::corpus_split>(m, "CorpusSplit")
      .def_readonly("train", &corpus::corpus_split::train)
      .def_readonly("test", &corpus::corpus_split::test)
      .def_readonly("seed", &corpus::corpus_split::seed)
      .def_readonly("fraction", &corpus::corpus_split::fraction);

  m.def(
      "load_corpus",
      [](const translit::transliteration_table& table, const std::string& path) {
        return corpus::load_corpus(table, path);
      },
      py::arg("table"), py::arg("path"));
  m.def(
      "filter_krit_suffixes",
      [](const std::vector<corpus::derivation_record>& records,
         const std::optional<std::vector<std::string>>& excluded) {
        if (!excluded) return corpus::filter_krit_suffixes(records);
        return corpus::filter_krit_suffixes(
            records, std::set<std::string>(excluded->begin(), excluded->end()));
      },
      py::arg("records"), py::arg("excluded") = std::nullopt);
  m.def(
      "filter_category",
      [](const std::vector<corpus::derivation_record>& records, const std::string& category) {
        return corpus::filter_category(records, corpus::category_from_string(category));
      },
      py::arg("records"), py::arg("category"));
  m.def("make_split", &corpus::make_split, py::arg("records"), py::arg("fraction"),
        py::arg("seed"));
  m.def("build_vocabulary", &corpus::build_vocabulary, py::arg("train"));
  m.def("encode_formation_pair", &corpus::encode_formation_pair, py::arg("record"),
        py::arg("vocab"), py::arg("source_max"), py::arg("target_max"));
  m.def("encode_split_pair", &corpus::encode_split_pair, py::arg("record"), py::arg("vocab"),
        py::arg("source_max"), py::arg("target_max"));
  m.def("decode_output_string", &corpus::decode_output_string, py::arg("indices"),
        py::arg("vocab"));
  m.def(
      "compute_maxima",
      [](const std::vector<corpus::derivation_record>& records, const std::string& direction) {
        auto maxima = corpus::compute_maxima(records, direction_arg(direction));
        return py::make_tuple(maxima.source_max, maxima.target_max);
      },
      py::arg("records"), py::arg("direction"));
  m.def(
      "corpus_stats",
      [](const std::vector<corpus::derivation_record>& records, bool machine) {
        auto stats = corpus::corpus_stats(records);
        return machine ? corpus::format_stats_kv(stats) : corpus::format_stats(stats);
      },
      py::arg("records"), py::arg("machine") = false);

  // ----------------------------------------------------------------- seq2seq
  py::class_<seq2seq::model_config>(m, "ModelConfig")
      .def(py::init<>())
      .def_readwrite("latent_dim", &seq2seq::model_config::latent_dim)
      .def_readwrite("vocab_size", &seq2seq::model_config::vocab_size)
      .def_readwrite("source_max", &seq2seq::model_config::source_max)
      .def_readwrite("target_max", &seq2seq::model_config::target_max)
      .def_readwrite("attention_kind", &seq2seq::model_config::attention_kind);

  py::class_<seq2seq::train_config>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("batch_size", &seq2seq::train_config::batch_size)
      .def_readwrite("epochs", &seq2seq::train_config::epochs)
      .def_readwrite("seed", &seq2seq::train_config::seed)
      .def_readwrite("validation_fraction", &seq2seq::train_config::validation_fraction)
      .def_readwrite("init_scale", &seq2seq::train_config::init_scale)
      .def_property(
          "learning_rate",
          [](const seq2seq::train_config& c) { return c.adam.learning_rate; },
          [](seq2seq::train_config& c, float v) { c.adam.learning_rate = v; });

  py::class_<py_model>(m, "Model")
      .def_property_readonly("direction",
                             [](const py_model& model) { return model.data.metadata.direction; })
      .def_property_readonly("category",
                             [](const py_model& model) { return model.data.metadata.category; })
      .def_property_readonly("vocab", [](const py_model& model) { return model.data.vocab; })
      .def_property_readonly("latent_dim",
                             [](const py_model& model) { return model.data.config.latent_dim; })
      .def("predict_formation", &py_model::predict_formation, py::arg("stem"),
           py::arg("suffix_name"))
      .def("predict_split", &py_model::predict_split, py::arg("pada"))
      .def("predict_string", &py_model::predict_string, py::arg("source"))
      .def("save", &py_model::save, py::arg("path"));

  m.def(
      "train",
      [](const std::vector<corpus::derivation_record>& records, const std::string& direction,
         const corpus::vocabulary& vocab, const seq2seq::model_config& mconfig,
         const seq2seq::train_config& tconfig) {
        auto result = seq2seq::train(records, direction_arg(direction), vocab, mconfig, tconfig);
        py_model model;
        model.data.config = mconfig;
        model.data.vocab = vocab;
        model.data.params = result.params;
        model.data.metadata.direction = direction;
        model.data.metadata.category = "krit";
        model.data.metadata.train_seed = tconfig.seed;
        model.data.metadata.epochs_run = static_cast<int>(result.history.size());
        model.data.metadata.best_epoch = result.best_epoch;
        model.data.metadata.record_count = records.size();
        if (!result.history.empty()) {
          model.data.metadata.final_train_loss = result.history.back().train_loss;
          model.data.metadata.final_validation_loss = result.history.back().validation_loss;
        }
        py::list history;
        for (const auto& stats : result.history) {
          history.append(py::make_tuple(stats.epoch, stats.train_loss, stats.validation_loss));
        }
        return py::make_tuple(std::move(model), history);
      },
      py::arg("records"), py::arg("direction"), py::arg("vocab"), py::arg("model_config"),
      py::arg("train_config"),
      "Returns (model, history); history rows are (epoch, train_loss, validation_loss)");

  m.def(
      "load_checkpoint",
      [](const std::string& path) {
        py_model model;
        model.data = seq2seq::load_checkpoint(path);
        return model;
      },
      py::arg("path"));

  // -------------------------------------------------------------------- eval
  m.def(
      "exact_match_accuracy",
      [](const std::vector<std::string>& predictions, const std::vector<std::string>& golds) {
        auto count = eval::exact_match_accuracy(predictions, golds);
        return py::make_tuple(count.successes, count.total, count.ratio);
      },
      py::arg("predictions"), py::arg("golds"));
  m.def("char_accuracy", &eval::char_accuracy, py::arg("predictions"), py::arg("golds"));
  m.def(
      "split_success",
      [](const std::pair<std::string, std::string>& predicted, bool malformed,
         const std::pair<std::string, std::string>& gold) {
        return eval::split_success({predicted.first, predicted.second, malformed},
                                   {gold.first, gold.second, false});
      },
      py::arg("predicted"), py::arg("malformed"), py::arg("gold"));
  m.def("format_result_cell", &eval::format_result_cell, py::arg("successes"), py::arg("total"));
}
