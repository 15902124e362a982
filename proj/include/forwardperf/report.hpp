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

#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace fwdperf {

enum class Verdict { pass, fail, refused, undetermined };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::fail: return "fail";
    case Verdict::refused: return "refused";
    case Verdict::undetermined: return "undetermined";
  }
  return "?";
}

inline Verdict verdict_from_string(const std::string& s) {
  if (s == "pass") return Verdict::pass;
  if (s == "fail") return Verdict::fail;
  if (s == "refused") return Verdict::refused;
  if (s == "undetermined") return Verdict::undetermined;
  throw std::invalid_argument("unknown verdict '" + s + "'");
}

/// One line of a verification report.
///
/// `value` is what was measured, `target` what the property predicts. Exact
/// checks carry a `tolerance`; statistical checks carry `std_error` and
/// `confidence` instead.
struct CheckEntry {
  std::string id;
  std::string check_tag;
  double value = std::numeric_limits<double>::quiet_NaN();
  double target = std::numeric_limits<double>::quiet_NaN();
  std::optional<double> tolerance;
  std::optional<double> std_error;
  std::optional<double> z_score;
  std::optional<double> confidence;
  std::optional<std::size_t> n_paths;
  std::optional<long> worst_node;
  Verdict verdict = Verdict::fail;
  std::string detail;

  bool passed() const { return verdict == Verdict::pass; }
};

/// Keyed collection of check entries. Entries are stored by id, so merging
/// two reports gives the same document regardless of merge order.
class VerificationReport {
 public:
  VerificationReport() = default;
  explicit VerificationReport(std::string title) : title_(std::move(title)) {}

  const std::string& title() const { return title_; }

  void add(CheckEntry entry) {
    if (entry.id.empty()) throw std::invalid_argument("check entry without id");
    auto [it, inserted] = entries_.emplace(entry.id, std::move(entry));
    if (!inserted) throw std::invalid_argument("duplicate check id '" + it->first + "'");
  }

  void merge(const VerificationReport& other) {
    for (const auto& [id, e] : other.entries_) add(e);
    for (const auto& n : other.notes_) add_note(n);
  }

  void add_note(std::string note) {
    for (const auto& n : notes_)
      if (n == note) return;
    notes_.push_back(std::move(note));
  }

  const std::map<std::string, CheckEntry>& entries() const { return entries_; }
  const std::vector<std::string>& notes() const { return notes_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  const CheckEntry& at(const std::string& id) const {
    auto it = entries_.find(id);
    if (it == entries_.end()) throw std::out_of_range("no check '" + id + "' in report");
    return it->second;
  }
  bool contains(const std::string& id) const { return entries_.count(id) != 0; }

  /// True when no entry failed or was refused. Undetermined entries are
  /// informational.
  bool passed() const {
    for (const auto& [id, e] : entries_)
      if (e.verdict == Verdict::fail || e.verdict == Verdict::refused) return false;
    return true;
  }

  std::size_t count(Verdict v) const {
    std::size_t n = 0;
    for (const auto& [id, e] : entries_) n += (e.verdict == v);
    return n;
  }

 private:
  std::string title_;
  std::map<std::string, CheckEntry> entries_;
  std::vector<std::string> notes_;
};

namespace detail {
inline nlohmann::json number_or_null(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return nullptr;
  return x > 0 ? "+inf" : "-inf";
}
inline double number_from_json(const nlohmann::json& j) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "+inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw std::invalid_argument("bad numeric field '" + s + "'");
  }
  return j.get<double>();
}
}  // namespace detail

inline nlohmann::json to_json(const CheckEntry& e) {
  nlohmann::json j;
  j["id"] = e.id;
  j["check_tag"] = e.check_tag;
  j["value"] = detail::number_or_null(e.value);
  j["target"] = detail::number_or_null(e.target);
  if (e.tolerance) j["tolerance"] = *e.tolerance;
  if (e.std_error) j["std_error"] = detail::number_or_null(*e.std_error);
  if (e.z_score) j["z_score"] = detail::number_or_null(*e.z_score);
  if (e.confidence) j["confidence"] = *e.confidence;
  if (e.n_paths) j["n_paths"] = *e.n_paths;
  if (e.worst_node) j["worst_node"] = *e.worst_node;
  j["verdict"] = to_string(e.verdict);
  if (!e.detail.empty()) j["detail"] = e.detail;
  return j;
}

inline CheckEntry check_entry_from_json(const nlohmann::json& j) {
  CheckEntry e;
  e.id = j.at("id").get<std::string>();
  e.check_tag = j.at("check_tag").get<std::string>();
  e.value = detail::number_from_json(j.at("value"));
  e.target = detail::number_from_json(j.at("target"));
  if (j.contains("tolerance")) e.tolerance = j["tolerance"].get<double>();
  if (j.contains("std_error")) e.std_error = detail::number_from_json(j["std_error"]);
  if (j.contains("z_score")) e.z_score = detail::number_from_json(j["z_score"]);
  if (j.contains("confidence")) e.confidence = j["confidence"].get<double>();
  if (j.contains("n_paths")) e.n_paths = j["n_paths"].get<std::size_t>();
  if (j.contains("worst_node")) e.worst_node = j["worst_node"].get<long>();
  e.verdict = verdict_from_string(j.at("verdict").get<std::string>());
  if (j.contains("detail")) e.detail = j["detail"].get<std::string>();
  return e;
}

inline nlohmann::json to_json(const VerificationReport& r) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["title"] = r.title();
  j["passed"] = r.passed();
  j["checks"] = nlohmann::json::array();
  for (const auto& [id, e] : r.entries()) j["checks"].push_back(to_json(e));
  j["notes"] = r.notes();
  return j;
}

inline VerificationReport report_from_json(const nlohmann::json& j) {
  VerificationReport r(j.value("title", std::string{}));
  for (const auto& c : j.at("checks")) r.add(check_entry_from_json(c));
  if (j.contains("notes"))
    for (const auto& n : j["notes"]) r.add_note(n.get<std::string>());
  return r;
}

/// Human-readable one-line-per-check summary.
inline void print_summary(std::ostream& os, const VerificationReport& r) {
  if (!r.title().empty()) os << "# " << r.title() << "\n";
  for (const auto& [id, e] : r.entries()) {
    os << (e.passed() ? "[PASS] " : e.verdict == Verdict::undetermined ? "[UNDT] "
                                  : e.verdict == Verdict::refused      ? "[RFSD] "
                                                                       : "[FAIL] ")
       << id << "  value=" << e.value << " target=" << e.target;
    if (e.tolerance) os << " tol=" << *e.tolerance;
    if (e.std_error) os << " se=" << *e.std_error;
    if (e.worst_node) os << " worst_node=" << *e.worst_node;
    if (!e.detail.empty()) os << "  (" << e.detail << ")";
    os << "\n";
  }
}

}  // namespace fwdperf
