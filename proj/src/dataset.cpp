#include "drglm/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace drglm {

void Dataset::check_new_column(const std::string& name, Eigen::Index rows) {
  if (name.empty()) throw DataError("column name must be nonempty");
  if (has(name)) throw DataError("duplicate column name: " + name);
  if (!empty_ && rows != n_rows_)
    throw DataError("column " + name + " has " + std::to_string(rows) +
                    " rows, expected " + std::to_string(n_rows_));
}

void Dataset::add_numeric(const std::string& name, Eigen::VectorXd values) {
  check_new_column(name, values.size());
  for (Eigen::Index i = 0; i < values.size(); ++i)
    if (!std::isfinite(values[i]))
      throw DataError("non-finite value in numeric column " + name + " at row " +
                      std::to_string(i));
  n_rows_ = values.size();
  empty_ = false;
  names_.push_back(name);
  Column c;
  c.kind = ColumnKind::numeric;
  c.values = std::move(values);
  cols_.push_back(std::move(c));
}

void Dataset::add_categorical(const std::string& name, std::vector<std::string> labels) {
  check_new_column(name, static_cast<Eigen::Index>(labels.size()));
  n_rows_ = static_cast<Eigen::Index>(labels.size());
  empty_ = false;
  std::set<std::string> distinct(labels.begin(), labels.end());
  Column c;
  c.kind = ColumnKind::categorical;
  c.levels.assign(distinct.begin(), distinct.end());
  c.labels = std::move(labels);
  names_.push_back(name);
  cols_.push_back(std::move(c));
}

bool Dataset::has(const std::string& name) const {
  return std::find(names_.begin(), names_.end(), name) != names_.end();
}

const Column& Dataset::col(const std::string& name) const {
  auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) throw DataError("unknown column: " + name);
  return cols_[static_cast<std::size_t>(it - names_.begin())];
}

Dataset Dataset::take_rows(const std::vector<Eigen::Index>& rows) const {
  Dataset out;
  for (std::size_t j = 0; j < names_.size(); ++j) {
    const Column& c = cols_[j];
    if (c.kind == ColumnKind::numeric) {
      Eigen::VectorXd v(static_cast<Eigen::Index>(rows.size()));
      for (std::size_t i = 0; i < rows.size(); ++i) v[static_cast<Eigen::Index>(i)] = c.values[rows[i]];
      out.add_numeric(names_[j], std::move(v));
    } else {
      std::vector<std::string> lab(rows.size());
      for (std::size_t i = 0; i < rows.size(); ++i) lab[i] = c.labels[static_cast<std::size_t>(rows[i])];
      out.add_categorical(names_[j], std::move(lab));
    }
  }
  return out;
}

namespace {

// RFC-4180 record reader: handles quoted fields, embedded commas/newlines,
// doubled quotes. Returns false at EOF.
bool read_record(std::istream& in, std::vector<std::string>& fields) {
  fields.clear();
  std::string field;
  bool in_quotes = false, any = false;
  int ch;
  while ((ch = in.get()) != EOF) {
    any = true;
    char c = static_cast<char>(ch);
    if (in_quotes) {
      if (c == '"') {
        if (in.peek() == '"') {
          field.push_back('"');
          in.get();
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      fields.push_back(field);
      field.clear();
    } else if (c == '\r') {
      // swallow; \r\n handled by \n branch
    } else if (c == '\n') {
      fields.push_back(field);
      return true;
    } else {
      field.push_back(c);
    }
  }
  if (!any) return false;
  fields.push_back(field);
  return true;
}

bool parse_double(const std::string& s, double& out) {
  std::string t = s;
  // trim
  auto b = t.find_first_not_of(" \t");
  auto e = t.find_last_not_of(" \t");
  if (b == std::string::npos) return false;
  t = t.substr(b, e - b + 1);
  const char* first = t.data();
  const char* last = t.data() + t.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || ptr != last) return false;
  return std::isfinite(out);
}

}  // namespace

Dataset read_csv(const std::string& path, const std::map<std::string, ColumnKind>& schema_hints) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path);

  std::vector<std::string> header;
  if (!read_record(in, header) || (header.size() == 1 && header[0].empty()))
    throw DataError("empty CSV file: " + path);

  std::vector<std::vector<std::string>> cells(header.size());
  std::vector<std::string> rec;
  std::size_t row = 0;
  while (read_record(in, rec)) {
    if (rec.size() == 1 && rec[0].empty()) continue;  // trailing blank line
    ++row;
    if (rec.size() != header.size())
      throw DataError("ragged row " + std::to_string(row) + " in " + path + ": got " +
                      std::to_string(rec.size()) + " fields, expected " +
                      std::to_string(header.size()));
    for (std::size_t j = 0; j < rec.size(); ++j) cells[j].push_back(rec[j]);
  }
  if (row == 0) throw DataError("CSV has header but no data rows: " + path);

  Dataset ds;
  for (std::size_t j = 0; j < header.size(); ++j) {
    const std::string& name = header[j];
    auto hint = schema_hints.find(name);
    bool force_numeric = hint != schema_hints.end() && hint->second == ColumnKind::numeric;
    bool force_categorical = hint != schema_hints.end() && hint->second == ColumnKind::categorical;

    bool all_numeric = true;
    Eigen::VectorXd vals(static_cast<Eigen::Index>(cells[j].size()));
    for (std::size_t i = 0; i < cells[j].size(); ++i) {
      double v;
      if (cells[j][i].empty())
        throw DataError("missing cell at row " + std::to_string(i + 1) + ", column " + name);
      if (!parse_double(cells[j][i], v)) {
        if (force_numeric)
          throw DataError("cannot parse '" + cells[j][i] + "' as numeric at row " +
                          std::to_string(i + 1) + ", column " + name);
        all_numeric = false;
        break;
      }
      vals[static_cast<Eigen::Index>(i)] = v;
    }

    if (all_numeric && !force_categorical)
      ds.add_numeric(name, std::move(vals));
    else
      ds.add_categorical(name, cells[j]);
  }
  return ds;
}

void write_csv(const Dataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open file for writing: " + path);

  auto quote = [](const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
      if (c == '"') q += "\"\"";
      else q.push_back(c);
    }
    q += "\"";
    return q;
  };

  const auto& names = ds.names();
  for (std::size_t j = 0; j < names.size(); ++j)
    out << (j ? "," : "") << quote(names[j]);
  out << "\n";

  std::ostringstream num;
  num.precision(17);
  for (Eigen::Index i = 0; i < ds.n_rows(); ++i) {
    for (std::size_t j = 0; j < names.size(); ++j) {
      if (j) out << ",";
      const Column& c = ds.col(names[j]);
      if (c.kind == ColumnKind::numeric) {
        num.str("");
        num << c.values[i];
        out << num.str();
      } else {
        out << quote(c.labels[static_cast<std::size_t>(i)]);
      }
    }
    out << "\n";
  }
}

Dataset override_exposure(const Dataset& ds, const std::string& name, double value) {
  const Column& c = ds.col(name);
  if (c.kind != ColumnKind::numeric)
    throw DataError("exposure column " + name + " is not numeric");
  for (Eigen::Index i = 0; i < c.values.size(); ++i)
    if (c.values[i] != 0.0 && c.values[i] != 1.0)
      throw DataError("exposure column " + name + " is not binary 0/1 (row " +
                      std::to_string(i) + ")");
  if (value != 0.0 && value != 1.0)
    throw DataError("exposure override value must be 0 or 1");

  Dataset out;
  for (const auto& nm : ds.names()) {
    const Column& cc = ds.col(nm);
    if (cc.kind == ColumnKind::numeric) {
      if (nm == name)
        out.add_numeric(nm, Eigen::VectorXd::Constant(cc.values.size(), value));
      else
        out.add_numeric(nm, cc.values);
    } else {
      out.add_categorical(nm, cc.labels);
    }
  }
  return out;
}

}  // namespace drglm
