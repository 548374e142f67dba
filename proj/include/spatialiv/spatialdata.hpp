#ifndef SPATIALIV_SPATIALDATA_HPP
#define SPATIALIV_SPATIALDATA_HPP

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "spatialiv/numkernel.hpp"

namespace spatialiv {

/// The universal input record: planar coordinates, exposure, and optional
/// outcome, covariates and region labels for n units.
struct SpatialDataset {
  Matrix coords;                 // n x 2
  Vector exposure;               // A
  std::optional<Vector> outcome; // Y
  Matrix covariates;             // n x p, p may be 0
  std::vector<std::string> covariate_names;
  std::optional<std::vector<std::string>> region;
  std::vector<std::string> ids;
  std::string distance_unit = "1e6 m";

  Eigen::Index n() const noexcept { return exposure.size(); }
  Eigen::Index p() const noexcept { return covariates.cols(); }

  /// Throws InvalidDataset when any documented invariant is violated.
  void validate() const;
};

/// Column-name mapping for CSV ingestion. Empty optional fields are not read.
struct CsvSchema {
  std::string x = "x";
  std::string y = "y";
  std::string exposure = "a";
  std::optional<std::string> id;
  std::optional<std::string> outcome;
  std::vector<std::string> covariates;
  std::optional<std::string> region;
};

struct LoadResult {
  SpatialDataset dataset;
  std::size_t dropped_rows = 0;
};

/// Reads a UTF-8, comma-separated file with a header row. Lines starting with
/// '#' are metadata and skipped. Rows missing any mapped field (empty, NA, NaN)
/// are dropped and counted.
LoadResult load_csv(const std::string& path, const CsvSchema& schema);

/// Writes the dataset with the column names `default_schema_for` reads back:
/// id, x, y, exposure, [outcome], covariates..., [region], preceded by
/// `# key: value` metadata lines.
void write_csv(const SpatialDataset& d, const std::string& path,
               const std::vector<std::pair<std::string, std::string>>& metadata = {});
CsvSchema default_schema_for(const SpatialDataset& d);

SymMatrix distance_matrix(const SpatialDataset& d);
SymMatrix distance_matrix(const Matrix& coords);

struct SpatialGraph {
  Eigen::Index n = 0;
  std::vector<std::pair<Eigen::Index, Eigen::Index>> edges;  // i < j, sorted, unique
  std::vector<Eigen::Index> degree;
  std::vector<Eigen::Index> component;  // component id per node
  Eigen::Index component_count = 0;

  bool connected() const noexcept { return component_count == 1; }
};

/// Builds a graph from an arbitrary edge list; drops self-loops and duplicates.
SpatialGraph make_graph(Eigen::Index n, std::vector<std::pair<Eigen::Index, Eigen::Index>> edges);

/// Symmetrized k-nearest-neighbour graph; distance ties go to the lower index.
SpatialGraph knn_graph(const SpatialDataset& d, int k);
SpatialGraph knn_graph(const Matrix& coords, int k);

/// Edge-list file with two id columns per row (header optional). Ids are
/// matched against `d.ids`.
SpatialGraph load_edge_list(const std::string& path, const SpatialDataset& d);

/// L = D - W with binary W.
SymMatrix graph_laplacian(const SpatialGraph& g);

}  // namespace spatialiv

#endif
