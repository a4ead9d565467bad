#include "core/frame.hpp"

#include <cmath>
#include <unordered_set>

#include "core/errors.hpp"

namespace spatfuse {

void validate_frame(const ModelFrame& frame) {
  int n = frame.n(), p = frame.p();
  if (frame.X.rows() != n) {
    throw DataError("model frame: X has " + std::to_string(frame.X.rows()) +
                    " rows but y has " + std::to_string(n));
  }
  if (static_cast<int>(frame.zone_ids.size()) != n ||
      static_cast<int>(frame.centroids.size()) != n) {
    throw DataError("model frame: zone_ids/centroids length mismatch");
  }
  if (static_cast<int>(frame.column_names.size()) != p) {
    throw DataError("model frame: column name count mismatch");
  }
  if (n < p + 2) {
    throw DataError("model frame: " + std::to_string(n) +
                    " rows is too few for " + std::to_string(p) +
                    " predictors (need at least p + 2)");
  }
  std::unordered_set<std::string> names;
  for (const auto& c : frame.column_names) {
    if (!names.insert(c).second) {
      throw DataError("model frame: duplicate column name '" + c + "'");
    }
  }
  for (int i = 0; i < n; ++i) {
    if (!std::isfinite(frame.y(i))) {
      throw DataError("model frame: non-finite target at row " +
                      std::to_string(i));
    }
    for (int j = 0; j < p; ++j) {
      if (!std::isfinite(frame.X(i, j))) {
        throw DataError("model frame: non-finite value at row " +
                        std::to_string(i) + ", column '" +
                        frame.column_names[static_cast<std::size_t>(j)] + "'");
      }
    }
  }
}

ModelFrame subset_rows(const ModelFrame& frame, const std::vector<int>& keep) {
  ModelFrame out;
  out.column_names = frame.column_names;
  int m = static_cast<int>(keep.size());
  out.y.resize(m);
  out.X.resize(m, frame.X.cols());
  out.zone_ids.reserve(keep.size());
  out.centroids.reserve(keep.size());
  for (int k = 0; k < m; ++k) {
    int i = keep[static_cast<std::size_t>(k)];
    out.y(k) = frame.y(i);
    out.X.row(k) = frame.X.row(i);
    out.zone_ids.push_back(frame.zone_ids[static_cast<std::size_t>(i)]);
    out.centroids.push_back(frame.centroids[static_cast<std::size_t>(i)]);
  }
  return out;
}

int column_index(const ModelFrame& frame, const std::string& name) {
  for (std::size_t j = 0; j < frame.column_names.size(); ++j) {
    if (frame.column_names[j] == name) return static_cast<int>(j);
  }
  return -1;
}

}  // namespace spatfuse
