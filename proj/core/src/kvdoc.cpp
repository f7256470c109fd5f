#include "gapasym/kvdoc.hpp"

#include <cctype>
#include <cstdio>
#include <cstring>
#include <stdexcept>

namespace gapasym {

KvValue KvValue::of_int(std::int64_t v) {
  KvValue x;
  x.kind_ = Kind::Int;
  x.int_ = v;
  return x;
}
KvValue KvValue::of_float(double v) {
  KvValue x;
  x.kind_ = Kind::Float;
  x.float_ = v;
  return x;
}
KvValue KvValue::of_bool(bool v) {
  KvValue x;
  x.kind_ = Kind::Bool;
  x.bool_ = v;
  return x;
}
KvValue KvValue::of_string(std::string v) {
  KvValue x;
  x.kind_ = Kind::String;
  x.str_ = std::move(v);
  return x;
}
KvValue KvValue::of_array(std::vector<KvValue> v) {
  KvValue x;
  x.kind_ = Kind::Array;
  x.array_ = std::move(v);
  return x;
}
KvValue KvValue::of_table(KvTable t) {
  KvValue x;
  x.kind_ = Kind::Table;
  x.table_ = std::make_shared<KvTable>(std::move(t));
  return x;
}

std::int64_t KvValue::as_int() const {
  if (kind_ != Kind::Int) throw std::runtime_error("kv: expected integer value");
  return int_;
}
double KvValue::as_double() const {
  if (kind_ == Kind::Int) return static_cast<double>(int_);
  if (kind_ != Kind::Float) throw std::runtime_error("kv: expected numeric value");
  return float_;
}
bool KvValue::as_bool() const {
  if (kind_ != Kind::Bool) throw std::runtime_error("kv: expected boolean value");
  return bool_;
}
const std::string& KvValue::as_string() const {
  if (kind_ != Kind::String) throw std::runtime_error("kv: expected string value");
  return str_;
}
const std::vector<KvValue>& KvValue::as_array() const {
  if (kind_ != Kind::Array) throw std::runtime_error("kv: expected array value");
  return array_;
}
std::vector<KvValue>& KvValue::as_array() {
  if (kind_ != Kind::Array) throw std::runtime_error("kv: expected array value");
  return array_;
}
const KvTable& KvValue::as_table() const {
  if (kind_ != Kind::Table) throw std::runtime_error("kv: expected table value");
  return *table_;
}
KvTable& KvValue::as_table() {
  if (kind_ != Kind::Table) throw std::runtime_error("kv: expected table value");
  return *table_;
}

bool KvTable::has(const std::string& key) const { return find(key) != nullptr; }

const KvValue* KvTable::find(const std::string& key) const {
  for (const auto& e : entries_)
    if (e.first == key) return &e.second;
  return nullptr;
}

const KvValue& KvTable::at(const std::string& key) const {
  const KvValue* v = find(key);
  if (!v) throw std::runtime_error("kv: missing key '" + key + "'");
  return *v;
}

KvValue& KvTable::insert(const std::string& key, KvValue v) {
  if (has(key)) throw std::runtime_error("kv: duplicate key '" + key + "'");
  entries_.emplace_back(key, std::move(v));
  return entries_.back().second;
}

KvValue& KvTable::get_or_insert_table(const std::string& key) {
  for (auto& e : entries_)
    if (e.first == key) return e.second;
  entries_.emplace_back(key, KvValue::of_table(KvTable{}));
  return entries_.back().second;
}

namespace {

struct Cursor {
  const std::string& text;
  std::size_t pos = 0;
  int line = 1;
  int col = 1;

  bool eof() const { return pos >= text.size(); }
  char peek() const { return text[pos]; }
  char next() {
    char c = text[pos++];
    if (c == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
    return c;
  }
  [[noreturn]] void fail(const std::string& msg) const { throw KvParseError(msg, line, col); }
};

void skip_inline_ws(Cursor& c) {
  while (!c.eof() && (c.peek() == ' ' || c.peek() == '\t' || c.peek() == '\r')) c.next();
}

void skip_ws_and_comments(Cursor& c, bool cross_lines) {
  for (;;) {
    skip_inline_ws(c);
    if (c.eof()) return;
    if (c.peek() == '#') {
      while (!c.eof() && c.peek() != '\n') c.next();
      continue;
    }
    if (c.peek() == '\n') {
      if (!cross_lines) return;
      c.next();
      continue;
    }
    return;
  }
}

bool is_key_char(char ch) {
  return std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '-';
}

std::string parse_key(Cursor& c) {
  std::string key;
  while (!c.eof() && is_key_char(c.peek())) key.push_back(c.next());
  if (key.empty()) c.fail("expected a key");
  return key;
}

KvValue parse_value(Cursor& c);

KvValue parse_array(Cursor& c) {
  c.next();  // consume '['
  std::vector<KvValue> items;
  for (;;) {
    skip_ws_and_comments(c, /*cross_lines=*/true);
    if (c.eof()) c.fail("unterminated array");
    if (c.peek() == ']') {
      c.next();
      break;
    }
    items.push_back(parse_value(c));
    skip_ws_and_comments(c, /*cross_lines=*/true);
    if (c.eof()) c.fail("unterminated array");
    if (c.peek() == ',') {
      c.next();
      continue;
    }
    if (c.peek() == ']') {
      c.next();
      break;
    }
    c.fail("expected ',' or ']' in array");
  }
  return KvValue::of_array(std::move(items));
}

KvValue parse_string(Cursor& c) {
  c.next();  // consume '"'
  std::string out;
  for (;;) {
    if (c.eof()) c.fail("unterminated string");
    char ch = c.next();
    if (ch == '"') break;
    if (ch == '\n') c.fail("newline in string");
    if (ch == '\\') {
      if (c.eof()) c.fail("unterminated escape");
      char e = c.next();
      switch (e) {
        case '"': out.push_back('"'); break;
        case '\\': out.push_back('\\'); break;
        case 'n': out.push_back('\n'); break;
        case 't': out.push_back('\t'); break;
        default: c.fail(std::string("unknown escape '\\") + e + "'");
      }
    } else {
      out.push_back(ch);
    }
  }
  return KvValue::of_string(std::move(out));
}

KvValue parse_number_or_literal(Cursor& c) {
  std::string tok;
  while (!c.eof()) {
    char ch = c.peek();
    if (std::isalnum(static_cast<unsigned char>(ch)) || ch == '+' || ch == '-' ||
        ch == '.' || ch == '_') {
      tok.push_back(c.next());
    } else {
      break;
    }
  }
  if (tok.empty()) c.fail("expected a value");
  if (tok == "true") return KvValue::of_bool(true);
  if (tok == "false") return KvValue::of_bool(false);

  const bool looks_float = tok.find('.') != std::string::npos ||
                           tok.find('e') != std::string::npos ||
                           tok.find('E') != std::string::npos ||
                           tok.find("inf") != std::string::npos ||
                           tok.find("nan") != std::string::npos;
  try {
    std::size_t used = 0;
    if (!looks_float) {
      std::int64_t v = std::stoll(tok, &used);
      if (used == tok.size()) return KvValue::of_int(v);
    }
    double d = std::stod(tok, &used);
    if (used == tok.size()) return KvValue::of_float(d);
  } catch (const std::exception&) {
  }
  c.fail("malformed value '" + tok + "'");
}

KvValue parse_value(Cursor& c) {
  skip_inline_ws(c);
  if (c.eof()) c.fail("expected a value");
  char ch = c.peek();
  if (ch == '[') return parse_array(c);
  if (ch == '"') return parse_string(c);
  return parse_number_or_literal(c);
}

std::vector<std::string> parse_table_path(Cursor& c) {
  std::vector<std::string> path;
  for (;;) {
    skip_inline_ws(c);
    path.push_back(parse_key(c));
    skip_inline_ws(c);
    if (!c.eof() && c.peek() == '.') {
      c.next();
      continue;
    }
    break;
  }
  return path;
}

KvTable* descend(KvTable* root, const std::vector<std::string>& path, std::size_t upto,
                 Cursor& c) {
  KvTable* t = root;
  for (std::size_t i = 0; i < upto; ++i) {
    KvValue* v = nullptr;
    for (auto& e : t->entries())
      if (e.first == path[i]) v = &e.second;
    if (!v) {
      v = &t->insert(path[i], KvValue::of_table(KvTable{}));
    }
    if (v->kind() == KvValue::Kind::Table) {
      t = &v->as_table();
    } else if (v->kind() == KvValue::Kind::Array && !v->as_array().empty() &&
               v->as_array().back().kind() == KvValue::Kind::Table) {
      t = &v->as_array().back().as_table();
    } else {
      c.fail("'" + path[i] + "' is not a table");
    }
  }
  return t;
}

void require_line_end(Cursor& c) {
  skip_inline_ws(c);
  if (c.eof()) return;
  if (c.peek() == '#') {
    while (!c.eof() && c.peek() != '\n') c.next();
  }
  if (c.eof()) return;
  if (c.peek() != '\n') c.fail("unexpected trailing characters");
  c.next();
}

}  // namespace

KvTable parse_kv(const std::string& text) {
  KvTable root;
  Cursor c{text};
  KvTable* current = &root;
  while (true) {
    skip_ws_and_comments(c, /*cross_lines=*/true);
    if (c.eof()) break;
    if (c.peek() == '[') {
      c.next();
      bool array_table = false;
      if (!c.eof() && c.peek() == '[') {
        c.next();
        array_table = true;
      }
      std::vector<std::string> path = parse_table_path(c);
      skip_inline_ws(c);
      if (c.eof() || c.peek() != ']') c.fail("expected ']'");
      c.next();
      if (array_table) {
        if (c.eof() || c.peek() != ']') c.fail("expected ']]'");
        c.next();
      }
      require_line_end(c);
      KvTable* parent = descend(&root, path, path.size() - 1, c);
      const std::string& leaf = path.back();
      if (array_table) {
        KvValue* v = nullptr;
        for (auto& e : parent->entries())
          if (e.first == leaf) v = &e.second;
        if (!v) v = &parent->insert(leaf, KvValue::of_array({}));
        if (v->kind() != KvValue::Kind::Array) c.fail("'" + leaf + "' is not an array of tables");
        v->as_array().push_back(KvValue::of_table(KvTable{}));
        current = &v->as_array().back().as_table();
      } else {
        KvValue& v = parent->get_or_insert_table(leaf);
        if (v.kind() != KvValue::Kind::Table) c.fail("'" + leaf + "' is not a table");
        if (!v.as_table().empty()) c.fail("table '" + leaf + "' redefined");
        current = &v.as_table();
      }
      continue;
    }
    std::string key = parse_key(c);
    skip_inline_ws(c);
    if (c.eof() || c.peek() != '=') c.fail("expected '=' after key '" + key + "'");
    c.next();
    KvValue v = parse_value(c);
    require_line_end(c);
    if (current->has(key)) c.fail("duplicate key '" + key + "'");
    current->insert(key, std::move(v));
  }
  return root;
}

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

void write_value(std::string& out, const KvValue& v) {
  switch (v.kind()) {
    case KvValue::Kind::Int:
      out += std::to_string(v.as_int());
      break;
    case KvValue::Kind::Float: {
      std::string s = format_g17(v.as_double());
      // keep floats distinguishable from ints on re-parse
      if (s.find_first_of(".eE") == std::string::npos &&
          s.find("inf") == std::string::npos && s.find("nan") == std::string::npos)
        s += ".0";
      out += s;
      break;
    }
    case KvValue::Kind::Bool:
      out += v.as_bool() ? "true" : "false";
      break;
    case KvValue::Kind::String: {
      out.push_back('"');
      for (char ch : v.as_string()) {
        switch (ch) {
          case '"': out += "\\\""; break;
          case '\\': out += "\\\\"; break;
          case '\n': out += "\\n"; break;
          case '\t': out += "\\t"; break;
          default: out.push_back(ch);
        }
      }
      out.push_back('"');
      break;
    }
    case KvValue::Kind::Array: {
      out.push_back('[');
      bool first = true;
      for (const auto& item : v.as_array()) {
        if (!first) out += ", ";
        first = false;
        write_value(out, item);
      }
      out.push_back(']');
      break;
    }
    case KvValue::Kind::Table:
      throw std::runtime_error("kv: inline tables are not serializable");
  }
}

bool is_table_array(const KvValue& v) {
  if (v.kind() != KvValue::Kind::Array) return false;
  const auto& a = v.as_array();
  if (a.empty()) return false;
  for (const auto& item : a)
    if (item.kind() != KvValue::Kind::Table) return false;
  return true;
}

void write_table(std::string& out, const KvTable& t, const std::string& prefix) {
  // scalar entries first, then subtables, mirroring the parse structure
  for (const auto& [key, v] : t.entries()) {
    if (v.kind() == KvValue::Kind::Table || is_table_array(v)) continue;
    out += key;
    out += " = ";
    write_value(out, v);
    out.push_back('\n');
  }
  for (const auto& [key, v] : t.entries()) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    if (v.kind() == KvValue::Kind::Table) {
      out += "\n[" + path + "]\n";
      write_table(out, v.as_table(), path);
    } else if (is_table_array(v)) {
      for (const auto& item : v.as_array()) {
        out += "\n[[" + path + "]]\n";
        write_table(out, item.as_table(), path);
      }
    }
  }
}

}  // namespace

std::string serialize_kv(const KvTable& t) {
  std::string out;
  write_table(out, t, "");
  return out;
}

}  // namespace gapasym
