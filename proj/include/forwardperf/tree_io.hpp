/*
   Copyright 2026 The forwardperf Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#pragma once

// JSON documents with line-anchored diagnostics, and the event-tree file
// format:
//
//   {"schema_version": 1,
//    "nodes": [{"id": 0, "parent": null, "time": 0,
//               "branches": [[0.5, 1.0], [0.5, -1.0]]},
//              {"id": 1, "parent": 0, "time": 1, "branches": []}, ...]}
//
// Branch k of a node belongs to the k-th node listing it as parent, in file
// order. Branches are [probability, price increment] pairs.

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "forwardperf/tree_market.hpp"

namespace fwdperf::io {

using nlohmann::json;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Line on which the value at each JSON pointer starts.
class SourceMap {
 public:
  SourceMap() = default;
  explicit SourceMap(std::string_view text) { scan(text); }

  std::optional<int> line_of(const std::string& pointer) const {
    auto it = lines_.find(pointer);
    if (it == lines_.end()) return std::nullopt;
    return it->second;
  }

 private:
  struct Frame {
    bool is_array;
    std::size_t index = 0;
    std::string key;
    std::string base;
  };

  static std::string escape(const std::string& k) {
    std::string o;
    for (char c : k) {
      if (c == '~') o += "~0";
      else if (c == '/') o += "~1";
      else o += c;
    }
    return o;
  }

  void scan(std::string_view s) {
    int line = 1;
    std::vector<Frame> st;
    bool expect_key = false;
    auto here = [&]() -> std::string {
      if (st.empty()) return "";
      const auto& f = st.back();
      return f.base + "/" + (f.is_array ? std::to_string(f.index) : escape(f.key));
    };
    auto value_start = [&] {
      const std::string p = here();
      if (!lines_.count(p)) lines_[p] = line;
      return p;
    };
    for (std::size_t i = 0; i < s.size(); ++i) {
      const char c = s[i];
      if (c == '\n') {
        ++line;
      } else if (c == '"') {
        std::string str;
        for (++i; i < s.size() && s[i] != '"'; ++i) {
          if (s[i] == '\\' && i + 1 < s.size()) ++i;
          if (s[i] == '\n') ++line;
          str += s[i];
        }
        if (expect_key && !st.empty() && !st.back().is_array) {
          st.back().key = str;
          expect_key = false;
        } else {
          value_start();
        }
      } else if (c == '{' || c == '[') {
        const std::string p = value_start();
        st.push_back({c == '[', 0, "", p});
        expect_key = c == '{';
      } else if (c == '}' || c == ']') {
        if (!st.empty()) st.pop_back();
      } else if (c == ',') {
        if (!st.empty()) {
          if (st.back().is_array) ++st.back().index;
          else expect_key = true;
        }
      } else if (c != ':' && !std::isspace(static_cast<unsigned char>(c))) {
        value_start();
        while (i + 1 < s.size() && std::string_view(",]}\n \t\r").find(s[i + 1]) == std::string_view::npos) ++i;
      }
    }
    if (!lines_.count("")) lines_[""] = 1;
  }

  std::map<std::string, int> lines_;
};

struct Document {
  std::string name;
  std::string text;
  json root;
  SourceMap map;

  [[noreturn]] void fail(const std::string& pointer, const std::string& msg) const {
    std::ostringstream os;
    os << name;
    // fall back to the closest enclosing value that has a line
    std::string p = pointer;
    std::optional<int> line;
    while (true) {
      line = map.line_of(p);
      if (line || p.empty()) break;
      p = p.substr(0, p.rfind('/'));
    }
    if (line) os << ":" << *line;
    os << ": " << (pointer.empty() ? "/" : pointer) << ": " << msg;
    throw ConfigError(os.str());
  }
};

inline Document parse_document(std::string text, std::string name) {
  Document d;
  d.name = std::move(name);
  d.text = std::move(text);
  try {
    d.root = json::parse(d.text);
  } catch (const json::exception& e) {
    // parse_error knows its byte offset; a number overflow only names the
    // offending token, so locate its first occurrence
    std::size_t byte = 0;
    if (const auto* pe = dynamic_cast<const json::parse_error*>(&e)) {
      byte = pe->byte;
    } else {
      const std::string what = e.what();
      const auto q0 = what.find('\''), q1 = what.rfind('\'');
      if (q0 != std::string::npos && q1 > q0) {
        const auto at = d.text.find(what.substr(q0 + 1, q1 - q0 - 1));
        if (at != std::string::npos) byte = at + 1;
      }
    }
    int line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < byte && i < d.text.size(); ++i) {
      if (d.text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::ostringstream os;
    os << d.name << ":" << line << ":" << col << ": parse error: " << e.what();
    throw ConfigError(os.str());
  }
  d.map = SourceMap(d.text);
  return d;
}

inline Document load_document(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_document(ss.str(), path);
}

/// Checked access to a value inside a Document.
class View {
 public:
  View(const Document& d, const json& j, std::string ptr) : d_(&d), j_(&j), ptr_(std::move(ptr)) {}
  explicit View(const Document& d) : View(d, d.root, "") {}

  const std::string& pointer() const { return ptr_; }
  const json& raw() const { return *j_; }
  [[noreturn]] void fail(const std::string& msg) const { d_->fail(ptr_, msg); }

  bool is_object() const { return j_->is_object(); }
  bool is_array() const { return j_->is_array(); }
  bool is_number() const { return j_->is_number(); }
  bool is_string() const { return j_->is_string(); }
  bool is_null() const { return j_->is_null(); }

  /// Fails on any key outside `allowed`.
  const View& allow_keys(std::initializer_list<std::string_view> allowed) const {
    if (!is_object()) fail("expected an object");
    for (const auto& [k, v] : j_->items()) {
      bool ok = false;
      for (auto a : allowed) ok |= (k == a);
      if (!ok) View(*d_, v, ptr_ + "/" + k).fail("unknown key \"" + k + "\"");
    }
    return *this;
  }

  bool has(const std::string& key) const { return is_object() && j_->contains(key); }

  View at(const std::string& key) const {
    if (!is_object()) fail("expected an object");
    if (!j_->contains(key)) fail("missing key \"" + key + "\"");
    return View(*d_, (*j_)[key], ptr_ + "/" + key);
  }

  View at(std::size_t i) const {
    if (!is_array()) fail("expected an array");
    if (i >= j_->size()) fail("index out of range");
    return View(*d_, (*j_)[i], ptr_ + "/" + std::to_string(i));
  }

  std::size_t size() const {
    if (!is_array() && !is_object()) fail("expected an array or object");
    return j_->size();
  }

  std::vector<std::string> keys() const {
    if (!is_object()) fail("expected an object");
    std::vector<std::string> k;
    for (const auto& [key, v] : j_->items()) k.push_back(key);
    return k;
  }

  double number() const {
    if (!is_number()) fail("expected a number");
    const double x = j_->get<double>();
    if (!std::isfinite(x)) fail("number must be finite");
    return x;
  }

  long integer() const {
    if (!j_->is_number_integer()) fail("expected an integer");
    return j_->get<long>();
  }

  bool boolean() const {
    if (!j_->is_boolean()) fail("expected true or false");
    return j_->get<bool>();
  }

  std::string str() const {
    if (!is_string()) fail("expected a string");
    return j_->get<std::string>();
  }

  std::vector<double> numbers() const {
    std::vector<double> out;
    for (std::size_t i = 0; i < size(); ++i) out.push_back(at(i).number());
    return out;
  }

  double number_or(const std::string& key, double def) const { return has(key) ? at(key).number() : def; }
  long integer_or(const std::string& key, long def) const { return has(key) ? at(key).integer() : def; }

 private:
  const Document* d_;
  const json* j_;
  std::string ptr_;
};

inline void require_schema_version(const View& v, long expected = 1) {
  const long got = v.at("schema_version").integer();
  if (got != expected)
    v.at("schema_version").fail("unsupported schema_version " + std::to_string(got) + " (expected " +
                                std::to_string(expected) + ")");
}

/// Event tree from a document of the format described at the top of this
/// file. Structural and probability errors are reported as ConfigError.
inline EventTree read_tree(const View& v) {
  v.allow_keys({"schema_version", "nodes"});
  require_schema_version(v);
  const View nodes = v.at("nodes");
  if (!nodes.is_array() || nodes.size() == 0) nodes.fail("expected a nonempty array of nodes");
  std::vector<NodeRecord> recs;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const View n = nodes.at(i);
    n.allow_keys({"id", "parent", "time", "branches"});
    NodeRecord r;
    r.id = n.at("id").integer();
    const View par = n.at("parent");
    if (!par.is_null()) r.parent = par.integer();
    r.time = static_cast<int>(n.at("time").integer());
    const View br = n.at("branches");
    for (std::size_t b = 0; b < br.size(); ++b) {
      const View pair = br.at(b);
      if (!pair.is_array() || pair.size() != 2) pair.fail("branch must be [probability, price_increment]");
      r.branches.emplace_back(pair.at(0).number(), pair.at(1).number());
    }
    recs.push_back(std::move(r));
  }
  EventTree tree;
  try {
    tree = EventTree::from_records(recs);
  } catch (const std::exception& e) {
    nodes.fail(e.what());
  }
  const auto rep = validate_tree(tree);
  if (!rep.passed()) {
    std::string msg = "invalid tree:";
    for (const auto& [id, e] : rep.entries())
      if (!e.passed()) msg += " [node " + std::to_string(e.worst_node.value_or(-1)) + "] " + e.detail + ";";
    nodes.fail(msg);
  }
  return tree;
}

inline EventTree load_tree(const std::string& path) {
  const auto d = load_document(path);
  return read_tree(View(d));
}

inline json tree_to_json(const EventTree& tree) {
  json nodes = json::array();
  for (const auto& r : tree.to_records()) {
    json n;
    n["id"] = r.id;
    n["parent"] = r.parent ? json(*r.parent) : json(nullptr);
    n["time"] = r.time;
    json br = json::array();
    for (const auto& [p, d] : r.branches) br.push_back({p, d});
    n["branches"] = br;
    nodes.push_back(n);
  }
  return {{"schema_version", 1}, {"nodes", nodes}};
}

}  // namespace fwdperf::io
