// Copyright 2026 The taskmix Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Task registry: the catalogue of supervised tasks a mixture is built from.
//
// Registry files are UTF-8 TSV with the header
//
//   name  family  collection  train_size  input_template  target_template
//
// `#` lines are comments. `train_size` is either a positive integer or the
// literal `external`, in which case the size must come from a size overlay
// (TSV `name  train_size`). Templates use `{field}` placeholders; `{{` and
// `}}` are literal braces.

#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "taskmix/error.hpp"
#include "taskmix/tsv.hpp"

namespace taskmix {

// ---------------------------------------------------------------------------
// Families
// ---------------------------------------------------------------------------

/// Task families. Declaration order is the canonical order used for ranking
/// tie-breaks and report layout.
enum class Family : std::uint8_t { SUM, DLG, NLI, CLS, SEM, CMNS, CBQA, RC, OTHER };

inline constexpr std::array<Family, 9> kAllFamilies = {
    Family::SUM,  Family::DLG,  Family::NLI, Family::CLS,  Family::SEM,
    Family::CMNS, Family::CBQA, Family::RC,  Family::OTHER};

/// The eight families of the pairwise transfer study (everything but OTHER).
inline constexpr std::array<Family, 8> kStudyFamilies = {
    Family::SUM, Family::DLG, Family::NLI, Family::CLS,
    Family::SEM, Family::CMNS, Family::CBQA, Family::RC};

constexpr std::string_view to_string(Family f) noexcept {
  switch (f) {
    case Family::SUM: return "SUM";
    case Family::DLG: return "DLG";
    case Family::NLI: return "NLI";
    case Family::CLS: return "CLS";
    case Family::SEM: return "SEM";
    case Family::CMNS: return "CMNS";
    case Family::CBQA: return "CBQA";
    case Family::RC: return "RC";
    case Family::OTHER: return "OTHER";
  }
  return "?";
}

inline std::optional<Family> try_parse_family(std::string_view s) noexcept {
  for (Family f : kAllFamilies) {
    if (to_string(f) == s) return f;
  }
  return std::nullopt;
}

inline Family parse_family(std::string_view s) {
  if (auto f = try_parse_family(s)) return *f;
  throw Error("unknown family '" + std::string(s) +
              "' (expected one of SUM DLG NLI CLS SEM CMNS CBQA RC OTHER)");
}

// ---------------------------------------------------------------------------
// Templates
// ---------------------------------------------------------------------------

/// A text template with `{name}` placeholders.
class TextTemplate {
 public:
  TextTemplate() = default;

  /// Throws Error on an unterminated `{`, a stray `}`, or a bad name.
  explicit TextTemplate(std::string source) : source_(std::move(source)) {
    std::string literal;
    for (std::size_t i = 0; i < source_.size(); ++i) {
      const char c = source_[i];
      if (c == '{') {
        if (i + 1 < source_.size() && source_[i + 1] == '{') {
          literal += '{';
          ++i;
          continue;
        }
        const auto close = source_.find('}', i + 1);
        if (close == std::string::npos) {
          throw Error("template '" + source_ + "': unterminated '{'");
        }
        std::string name = source_.substr(i + 1, close - i - 1);
        if (!valid_name(name)) {
          throw Error("template '" + source_ + "': bad placeholder name '" + name + "'");
        }
        if (!literal.empty()) pieces_.emplace_back(std::move(literal));
        literal.clear();
        if (std::find(fields_.begin(), fields_.end(), name) == fields_.end()) {
          fields_.push_back(name);
        }
        pieces_.emplace_back(Placeholder{std::move(name)});
        i = close;
      } else if (c == '}') {
        if (i + 1 < source_.size() && source_[i + 1] == '}') {
          literal += '}';
          ++i;
          continue;
        }
        throw Error("template '" + source_ + "': stray '}'");
      } else {
        literal += c;
      }
    }
    if (!literal.empty()) pieces_.emplace_back(std::move(literal));
  }

  const std::string& source() const noexcept { return source_; }

  /// Placeholder names in first-appearance order, without duplicates.
  const std::vector<std::string>& fields() const noexcept { return fields_; }

  /// Substitutes every placeholder. Missing values throw.
  std::string render(const std::map<std::string, std::string, std::less<>>& values) const {
    std::string out;
    for (const auto& piece : pieces_) {
      if (const auto* text = std::get_if<std::string>(&piece)) {
        out += *text;
      } else {
        const auto& name = std::get<Placeholder>(piece).name;
        const auto it = values.find(name);
        if (it == values.end()) {
          throw Error("missing value for placeholder '{" + name + "}'");
        }
        out += it->second;
      }
    }
    return out;
  }

  friend bool operator==(const TextTemplate& a, const TextTemplate& b) {
    return a.source_ == b.source_;
  }

 private:
  struct Placeholder {
    std::string name;
  };

  static bool valid_name(std::string_view name) {
    if (name.empty()) return false;
    const auto alpha = [](char c) {
      return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
    };
    if (!alpha(name.front())) return false;
    return std::all_of(name.begin(), name.end(),
                       [&](char c) { return alpha(c) || (c >= '0' && c <= '9'); });
  }

  std::string source_;
  std::vector<std::variant<std::string, Placeholder>> pieces_;
  std::vector<std::string> fields_;
};

// ---------------------------------------------------------------------------
// Tasks and registry
// ---------------------------------------------------------------------------

struct TaskSpec {
  std::string name;
  Family family = Family::OTHER;
  std::string collection = "-";
  std::uint64_t train_size = 1;
  TextTemplate input_template;
  TextTemplate target_template;

  friend bool operator==(const TaskSpec&, const TaskSpec&) = default;
};

/// One text-to-text example with provenance. `family` is a free tag so that
/// unsupervised records can carry their own label.
struct ExampleRecord {
  std::string task;
  std::string family;
  std::string inputs;
  std::string targets;
  std::uint64_t index = 0;
  bool truncated = false;

  friend bool operator==(const ExampleRecord&, const ExampleRecord&) = default;
};

struct RegistryTotals {
  std::size_t task_count = 0;
  std::uint64_t example_total = 0;

  friend bool operator==(const RegistryTotals&, const RegistryTotals&) = default;
};

/// Ordered, name-unique collection of tasks. Immutable once built.
class Registry {
 public:
  Registry() = default;

  /// Throws Error on a duplicate name or a zero train_size.
  explicit Registry(std::vector<TaskSpec> tasks) : tasks_(std::move(tasks)) {
    for (std::size_t i = 0; i < tasks_.size(); ++i) {
      const auto& t = tasks_[i];
      if (t.name.empty()) throw Error("task at position " + std::to_string(i) + " has no name");
      if (t.train_size < 1) throw Error("task '" + t.name + "': train_size must be >= 1");
      if (!index_.emplace(t.name, i).second) throw Error("duplicate task name '" + t.name + "'");
    }
  }

  const std::vector<TaskSpec>& tasks() const noexcept { return tasks_; }
  std::size_t size() const noexcept { return tasks_.size(); }
  bool empty() const noexcept { return tasks_.empty(); }
  const TaskSpec& operator[](std::size_t i) const { return tasks_[i]; }

  auto begin() const noexcept { return tasks_.begin(); }
  auto end() const noexcept { return tasks_.end(); }

  const TaskSpec* find(std::string_view name) const {
    const auto it = index_.find(std::string(name));
    return it == index_.end() ? nullptr : &tasks_[it->second];
  }

  const TaskSpec& at(std::string_view name) const {
    if (const auto* t = find(name)) return *t;
    throw Error("unknown task '" + std::string(name) + "'");
  }

  bool contains(std::string_view name) const { return find(name) != nullptr; }

  /// Families present, in canonical order.
  std::vector<Family> families() const {
    std::set<Family> seen;
    for (const auto& t : tasks_) seen.insert(t.family);
    return {seen.begin(), seen.end()};
  }

  friend bool operator==(const Registry& a, const Registry& b) { return a.tasks_ == b.tasks_; }

 private:
  std::vector<TaskSpec> tasks_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Sizes for rows whose train_size is `external`.
using SizeOverlay = std::map<std::string, std::uint64_t, std::less<>>;

inline constexpr std::array<std::string_view, 6> kRegistryColumns = {
    "name", "family", "collection", "train_size", "input_template", "target_template"};

inline SizeOverlay parse_size_overlay(std::istream& in, const std::string& source = "<overlay>") {
  SizeOverlay overlay;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (auto line = tsv::next_line(in, line_no)) {
    const auto cells = tsv::split(line->text);
    if (!header_seen && cells.size() == 2 && tsv::trim(cells[0]) == "name" &&
        tsv::trim(cells[1]) == "train_size") {
      header_seen = true;
      continue;
    }
    header_seen = true;
    if (cells.size() != 2) {
      throw ParseError(source, line->number, "expected 2 columns (name, train_size), got " +
                                                 std::to_string(cells.size()));
    }
    const std::string name(tsv::trim(cells[0]));
    const auto size = tsv::parse_u64(cells[1]);
    if (!size) throw ParseError(source, line->number, "bad train_size '" + cells[1] + "'");
    if (*size < 1) throw ParseError(source, line->number, "train_size must be >= 1");
    if (!overlay.emplace(name, *size).second) {
      throw ParseError(source, line->number, "duplicate overlay entry '" + name + "'");
    }
  }
  return overlay;
}

inline SizeOverlay load_size_overlay(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open size overlay '" + path.string() + "'");
  return parse_size_overlay(in, path.string());
}

/// Parses a registry. Rows with `external` sizes are resolved from
/// `overlay`; every overlay entry must name an external row.
inline Registry parse_registry(std::istream& in, const std::string& source = "<registry>",
                               const SizeOverlay& overlay = {}) {
  std::vector<TaskSpec> tasks;
  std::set<std::string, std::less<>> names;
  std::set<std::string, std::less<>> used_overlay;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (auto line = tsv::next_line(in, line_no)) {
    const auto cells = tsv::split(line->text);
    if (!header_seen) {
      header_seen = true;
      bool is_header = cells.size() == kRegistryColumns.size();
      for (std::size_t i = 0; is_header && i < cells.size(); ++i) {
        is_header = tsv::trim(cells[i]) == kRegistryColumns[i];
      }
      if (!is_header) {
        throw ParseError(source, line->number,
                         "expected header 'name family collection train_size input_template "
                         "target_template'");
      }
      continue;
    }
    if (cells.size() != kRegistryColumns.size()) {
      throw ParseError(source, line->number,
                       "expected 6 tab-separated columns, got " + std::to_string(cells.size()));
    }
    TaskSpec t;
    t.name = std::string(tsv::trim(cells[0]));
    if (t.name.empty()) throw ParseError(source, line->number, "empty task name");
    if (!names.insert(t.name).second) {
      throw ParseError(source, line->number, "duplicate task name '" + t.name + "'");
    }
    const auto family = try_parse_family(tsv::trim(cells[1]));
    if (!family) throw ParseError(source, line->number, "unknown family '" + cells[1] + "'");
    t.family = *family;
    t.collection = std::string(tsv::trim(cells[2]));
    if (t.collection.empty()) t.collection = "-";
    const auto size_text = tsv::trim(cells[3]);
    if (size_text == "external") {
      const auto it = overlay.find(t.name);
      if (it == overlay.end()) {
        throw ParseError(source, line->number,
                         "train_size of '" + t.name + "' is external but no overlay supplies it");
      }
      t.train_size = it->second;
      used_overlay.insert(t.name);
    } else {
      const auto size = tsv::parse_u64(size_text);
      if (!size) throw ParseError(source, line->number, "bad train_size '" + cells[3] + "'");
      if (*size < 1) {
        throw ParseError(source, line->number, "train_size must be >= 1 for '" + t.name + "'");
      }
      if (overlay.contains(t.name)) {
        throw ParseError(source, line->number,
                         "overlay supplies a size for '" + t.name + "' which already has one");
      }
      t.train_size = *size;
    }
    try {
      t.input_template = TextTemplate(cells[4]);
      t.target_template = TextTemplate(cells[5]);
    } catch (const Error& e) {
      throw ParseError(source, line->number, e.what());
    }
    tasks.push_back(std::move(t));
  }
  for (const auto& [name, size] : overlay) {
    if (!used_overlay.contains(name)) {
      throw Error(source + ": overlay entry '" + name + "' does not match an external row");
    }
  }
  return Registry(std::move(tasks));
}

inline Registry load_registry(const std::filesystem::path& path,
                              const std::optional<std::filesystem::path>& sizes = std::nullopt) {
  SizeOverlay overlay;
  if (sizes) overlay = load_size_overlay(*sizes);
  std::ifstream in(path);
  if (!in) throw Error("cannot open registry '" + path.string() + "'");
  return parse_registry(in, path.string(), overlay);
}

/// Writes a registry with every size resolved. Output parses back to an
/// equal Registry.
inline void save_registry(const Registry& reg, std::ostream& out) {
  for (std::size_t i = 0; i < kRegistryColumns.size(); ++i) {
    out << (i ? "\t" : "") << kRegistryColumns[i];
  }
  out << '\n';
  const auto check = [](const TaskSpec& t, const std::string& cell) {
    if (cell.find_first_of("\t\n\r") != std::string::npos) {
      throw Error("task '" + t.name + "': field contains a tab or newline");
    }
    return cell;
  };
  for (const auto& t : reg) {
    out << check(t, t.name) << '\t' << to_string(t.family) << '\t' << check(t, t.collection)
        << '\t' << t.train_size << '\t' << check(t, t.input_template.source()) << '\t'
        << check(t, t.target_template.source()) << '\n';
  }
}

inline RegistryTotals registry_totals(const Registry& reg) {
  RegistryTotals totals{reg.size(), 0};
  for (const auto& t : reg) totals.example_total += t.train_size;
  return totals;
}

inline Registry filter_by_family(const Registry& reg, std::span<const Family> families) {
  if (families.empty()) throw Error("filter_by_family: family set must be nonempty");
  std::vector<TaskSpec> kept;
  for (const auto& t : reg) {
    if (std::find(families.begin(), families.end(), t.family) != families.end()) {
      kept.push_back(t);
    }
  }
  return Registry(std::move(kept));
}

inline Registry filter_by_family(const Registry& reg, std::initializer_list<Family> families) {
  return filter_by_family(reg, std::span<const Family>(families.begin(), families.size()));
}

/// Family names are validated; an unknown name throws.
inline Registry filter_by_family(const Registry& reg, const std::vector<std::string>& names) {
  std::vector<Family> families;
  for (const auto& n : names) families.push_back(parse_family(n));
  return filter_by_family(reg, std::span<const Family>(families));
}

/// Keeps the named tasks, in registry order.
inline Registry select_tasks(const Registry& reg, std::span<const std::string> names) {
  std::set<std::string, std::less<>> wanted(names.begin(), names.end());
  for (const auto& n : wanted) {
    if (!reg.contains(n)) throw Error("unknown task '" + n + "'");
  }
  std::vector<TaskSpec> kept;
  for (const auto& t : reg) {
    if (wanted.contains(t.name)) kept.push_back(t);
  }
  return Registry(std::move(kept));
}

// ---------------------------------------------------------------------------
// Representatives
// ---------------------------------------------------------------------------

/// Per-family task picks, TSV `family  task`.
struct Representative {
  Family family = Family::OTHER;
  std::string task;

  friend bool operator==(const Representative&, const Representative&) = default;
};

inline std::vector<Representative> parse_representatives(
    std::istream& in, const std::string& source = "<representatives>") {
  std::vector<Representative> reps;
  std::size_t line_no = 0;
  bool header = false;
  while (auto line = tsv::next_line(in, line_no)) {
    const auto cells = tsv::split(line->text);
    if (cells.size() != 2) throw ParseError(source, line->number, "expected 2 columns");
    if (!header) {
      if (tsv::trim(cells[0]) != "family" || tsv::trim(cells[1]) != "task") {
        throw ParseError(source, line->number, "expected header 'family\\ttask'");
      }
      header = true;
      continue;
    }
    const auto family = try_parse_family(tsv::trim(cells[0]));
    if (!family) {
      throw ParseError(source, line->number, "unknown family '" + cells[0] + "'");
    }
    reps.push_back({*family, std::string(tsv::trim(cells[1]))});
  }
  if (!header) throw ParseError(source, 0, "empty representatives file");
  return reps;
}

inline std::vector<Representative> load_representatives(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open representatives '" + path.string() + "'");
  return parse_representatives(in, path.string());
}

/// The registry restricted to `reps`; each pick's family must agree with
/// the registry.
inline Registry representative_registry(const Registry& reg,
                                        std::span<const Representative> reps) {
  std::vector<std::string> names;
  for (const auto& r : reps) {
    const auto& t = reg.at(r.task);
    if (t.family != r.family) {
      throw Error("representative '" + r.task + "' is listed under " +
                  std::string(to_string(r.family)) + " but the registry says " +
                  std::string(to_string(t.family)));
    }
    names.push_back(r.task);
  }
  return select_tasks(reg, names);
}

// ---------------------------------------------------------------------------
// Formatting
// ---------------------------------------------------------------------------

using FieldMap = std::map<std::string, std::string, std::less<>>;

/// Renders a raw record through the task's templates.
inline ExampleRecord format_example(const TaskSpec& task, const FieldMap& fields,
                                    std::uint64_t index = 0) {
  const auto& in_fields = task.input_template.fields();
  const auto& out_fields = task.target_template.fields();
  for (const auto& [name, value] : fields) {
    const bool known = std::find(in_fields.begin(), in_fields.end(), name) != in_fields.end() ||
                       std::find(out_fields.begin(), out_fields.end(), name) != out_fields.end();
    if (!known) {
      throw Error("task '" + task.name + "': field '" + name + "' is not a template placeholder");
    }
  }
  ExampleRecord rec;
  rec.task = task.name;
  rec.family = std::string(to_string(task.family));
  try {
    rec.inputs = task.input_template.render(fields);
    rec.targets = task.target_template.render(fields);
  } catch (const Error& e) {
    throw Error("task '" + task.name + "': " + e.what());
  }
  rec.index = index;
  return rec;
}

/// An entity mention for sequence-to-sequence NER targets.
struct TaggedEntity {
  std::string tag;
  std::string text;
};

/// "[PER] Alice [LOC] New York": tags and entities in sentence order.
inline std::string render_tagged_entities(std::span<const TaggedEntity> entities) {
  std::string out;
  for (const auto& e : entities) {
    if (!out.empty()) out += ' ';
    out += '[';
    out += e.tag;
    out += "] ";
    out += e.text;
  }
  return out;
}

}  // namespace taskmix
