#include "pratyaya/translit.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

namespace pratyaya::translit {

namespace {

std::string describe_position(std::size_t position, std::string_view context) {
  std::ostringstream os;
  os << "no ITRANS token matches at position " << position;
  if (!context.empty()) {
    os << " in \"" << context << "\"";
  }
  return os.str();
}

}  // namespace

unknown_token::unknown_token(std::size_t pos, std::string_view context)
    : error(describe_position(pos, context)), position(pos) {}

invalid_slp1_char::invalid_slp1_char(std::size_t pos, char c)
    : error("not an SLP1 character at position " + std::to_string(pos) + ": '" +
            std::string(1, c) + "'"),
      position(pos),
      character(c) {}

transliteration_table transliteration_table::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw config_error("cannot open transliteration table: " + path);
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str(), path);
}

transliteration_table transliteration_table::parse(std::string_view text, const std::string& origin) {
  transliteration_table table;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  auto fail = [&](const std::string& reason) {
    throw config_error(origin + ":" + std::to_string(line_no) + ": " + reason);
  };

  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') {
      if (pos > text.size()) break;
      continue;
    }

    std::size_t tab = line.find('\t');
    if (tab == std::string_view::npos) fail("expected \"itrans<TAB>slp1\"");
    std::string_view token = line.substr(0, tab);
    std::string_view target = line.substr(tab + 1);
    if (token.empty()) fail("empty ITRANS token");
    if (target.size() != 1) fail("SLP1 side must be a single character");
    if (table.token_to_slp1_.count(std::string(token)) != 0) {
      fail("duplicate ITRANS token: " + std::string(token));
    }

    table_entry entry;
    entry.itrans = std::string(token);
    entry.slp1 = target[0];
    entry.canonical = table.slp1_to_canonical_.count(entry.slp1) == 0;

    // Same-target prefix pairs would make greedy matching order-dependent.
    for (const table_entry& other : table.entries_) {
      if (other.slp1 != entry.slp1) continue;
      const std::string& a = other.itrans;
      const std::string& b = entry.itrans;
      const std::string& shorter = a.size() < b.size() ? a : b;
      const std::string& longer = a.size() < b.size() ? b : a;
      if (shorter.size() < longer.size() && longer.compare(0, shorter.size(), shorter) == 0) {
        fail("entry \"" + b + "\" is a prefix sibling of \"" + a + "\" for the same SLP1 char");
      }
    }

    table.token_to_slp1_.emplace(entry.itrans, entry.slp1);
    if (entry.canonical) {
      table.slp1_to_canonical_.emplace(entry.slp1, entry.itrans);
    }
    table.longest_token_ = std::max(table.longest_token_, entry.itrans.size());
    table.entries_.push_back(std::move(entry));
    if (pos > text.size()) break;
  }

  if (table.entries_.empty()) {
    throw config_error(origin + ": transliteration table is empty");
  }
  return table;
}

bool transliteration_table::is_slp1_char(char c) const {
  return slp1_to_canonical_.count(c) != 0;
}

const std::string& transliteration_table::canonical_itrans(char slp1) const {
  auto it = slp1_to_canonical_.find(slp1);
  if (it == slp1_to_canonical_.end()) {
    throw invalid_slp1_char(0, slp1);
  }
  return it->second;
}

char transliteration_table::lookup(std::string_view itrans_token) const {
  auto it = token_to_slp1_.find(std::string(itrans_token));
  return it == token_to_slp1_.end() ? '\0' : it->second;
}

std::string itrans_to_slp1(const transliteration_table& table, std::string_view itrans) {
  std::string out;
  out.reserve(itrans.size());
  std::size_t pos = 0;
  while (pos < itrans.size()) {
    if (itrans[pos] == '_') {  // ITRANS null join: breaks digraphs, emits nothing
      ++pos;
      continue;
    }
    std::size_t longest = std::min(table.longest_token(), itrans.size() - pos);
    bool matched = false;
    for (std::size_t len = longest; len >= 1; --len) {
      char slp1 = table.lookup(itrans.substr(pos, len));
      if (slp1 != '\0') {
        out.push_back(slp1);
        pos += len;
        matched = true;
        break;
      }
    }
    if (!matched) {
      throw unknown_token(pos, itrans);
    }
  }
  return out;
}

std::string slp1_to_itrans(const transliteration_table& table, std::string_view slp1) {
  std::string out;
  std::string converted;  // SLP1 image of `out`, grown alongside it
  out.reserve(slp1.size() * 2);
  for (std::size_t i = 0; i < slp1.size(); ++i) {
    char c = slp1[i];
    if (!table.is_slp1_char(c)) {
      throw invalid_slp1_char(i, c);
    }
    const std::string& token = table.canonical_itrans(c);
    // Append a '_' join when plain juxtaposition would re-tokenize across
    // the boundary ("s"+"h" would otherwise read back as "sh" = S).
    bool needs_join = false;
    if (!out.empty()) {
      std::string candidate = out + token;
      try {
        needs_join = itrans_to_slp1(table, candidate) != converted + c;
      } catch (const unknown_token&) {
        needs_join = true;
      }
    }
    if (needs_join) out.push_back('_');
    out += token;
    converted.push_back(c);
  }
  return out;
}

std::vector<violation> validate_slp1(const transliteration_table& table, std::string_view text,
                                     bool allow_control) {
  std::vector<violation> violations;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (table.is_slp1_char(c)) continue;
    if (allow_control && is_control_char(c)) continue;
    violations.push_back({i, c});
  }
  return violations;
}

std::string convert_line(const transliteration_table& table, std::string_view line, bool to_slp1) {
  std::string out;
  out.reserve(line.size());
  std::size_t start = 0;
  auto is_passthrough = [](char c) {
    return c == join_char || std::isspace(static_cast<unsigned char>(c)) != 0;
  };
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i < line.size() && !is_passthrough(line[i])) continue;
    std::string_view segment = line.substr(start, i - start);
    if (!segment.empty()) {
      out += to_slp1 ? itrans_to_slp1(table, segment) : slp1_to_itrans(table, segment);
    }
    if (i < line.size()) out.push_back(line[i]);
    start = i + 1;
  }
  return out;
}

}  // namespace pratyaya::translit
