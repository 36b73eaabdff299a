#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "drglm/errors.hpp"

namespace drglm {

enum class ColumnKind { numeric, categorical };

/// One column of a Dataset. Numeric columns hold finite reals; categorical
/// columns hold string labels plus the sorted list of distinct levels.
struct Column {
  ColumnKind kind = ColumnKind::numeric;
  Eigen::VectorXd values;            // numeric only
  std::vector<std::string> labels;   // categorical only, one per row
  std::vector<std::string> levels;   // categorical only, sorted distinct

  Eigen::Index size() const {
    return kind == ColumnKind::numeric ? values.size()
                                       : static_cast<Eigen::Index>(labels.size());
  }
};

/// Immutable column-oriented table. All columns share the same row count and
/// names are unique; safe to share read-only across threads.
class Dataset {
 public:
  Dataset() = default;

  void add_numeric(const std::string& name, Eigen::VectorXd values);
  void add_categorical(const std::string& name, std::vector<std::string> labels);

  bool has(const std::string& name) const;
  const Column& col(const std::string& name) const;
  Eigen::Index n_rows() const { return n_rows_; }
  Eigen::Index n_cols() const { return static_cast<Eigen::Index>(names_.size()); }
  const std::vector<std::string>& names() const { return names_; }

  /// Row-subset (with repetition allowed); used by bootstrap resampling and
  /// stratified fits.
  Dataset take_rows(const std::vector<Eigen::Index>& rows) const;

 private:
  void check_new_column(const std::string& name, Eigen::Index rows);

  std::vector<std::string> names_;
  std::vector<Column> cols_;
  Eigen::Index n_rows_ = 0;
  bool empty_ = true;
};

/// RFC-4180 CSV loader. A column is numeric when every cell parses as a finite
/// real; otherwise categorical. Entries in `schema_hints` override inference.
Dataset read_csv(const std::string& path,
                 const std::map<std::string, ColumnKind>& schema_hints = {});

/// Writes numeric columns at full round-trip precision.
void write_csv(const Dataset& ds, const std::string& path);

/// Copy of `ds` with the binary numeric column `name` set to `value` everywhere.
Dataset override_exposure(const Dataset& ds, const std::string& name, double value);

}  // namespace drglm
