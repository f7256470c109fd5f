#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace gapasym {

/// Minimal structured-text document: `key = value` lines, [table] sections,
/// [[array-of-tables]] sections, `#` comments. Values are integers, floats,
/// booleans, quoted strings, or (nested) arrays. This is the grammar used by
/// operator description files and run configs; see README for the full spec.
class KvValue;

struct KvParseError : std::runtime_error {
  int line;
  int column;
  KvParseError(const std::string& msg, int line_, int col_)
      : std::runtime_error(msg + " (line " + std::to_string(line_) + ", column " +
                           std::to_string(col_) + ")"),
        line(line_),
        column(col_) {}
};

class KvTable {
 public:
  using Entry = std::pair<std::string, KvValue>;

  bool has(const std::string& key) const;
  const KvValue& at(const std::string& key) const;  // throws if missing
  const KvValue* find(const std::string& key) const;
  KvValue& insert(const std::string& key, KvValue v);  // throws on duplicate
  KvValue& get_or_insert_table(const std::string& key);

  const std::vector<Entry>& entries() const { return entries_; }
  std::vector<Entry>& entries() { return entries_; }
  bool empty() const { return entries_.empty(); }

 private:
  std::vector<Entry> entries_;  // insertion-ordered
};

class KvValue {
 public:
  enum class Kind { Int, Float, Bool, String, Array, Table };

  KvValue() : kind_(Kind::Int), int_(0) {}
  static KvValue of_int(std::int64_t v);
  static KvValue of_float(double v);
  static KvValue of_bool(bool v);
  static KvValue of_string(std::string v);
  static KvValue of_array(std::vector<KvValue> v);
  static KvValue of_table(KvTable t);

  Kind kind() const { return kind_; }
  bool is_number() const { return kind_ == Kind::Int || kind_ == Kind::Float; }

  std::int64_t as_int() const;
  double as_double() const;  // accepts Int or Float
  bool as_bool() const;
  const std::string& as_string() const;
  const std::vector<KvValue>& as_array() const;
  const KvTable& as_table() const;
  KvTable& as_table();
  std::vector<KvValue>& as_array();

 private:
  Kind kind_;
  std::int64_t int_ = 0;
  double float_ = 0.0;
  bool bool_ = false;
  std::string str_;
  std::vector<KvValue> array_;
  std::shared_ptr<KvTable> table_;
};

/// Parse a document. Throws KvParseError with line/column on malformed input.
KvTable parse_kv(const std::string& text);

/// Serialize so that parse_kv(serialize_kv(t)) reproduces t. Floats are
/// written with 17 significant digits.
std::string serialize_kv(const KvTable& t);

/// Format a double with 17 significant digits (round-trip exact), '.' decimal
/// separator, no locale dependence.
std::string format_g17(double v);

}  // namespace gapasym
