#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "arraykit/cluster.hpp"
#include "arraykit/dataset.hpp"
#include "arraykit/diffexpr.hpp"
#include "arraykit/matrix.hpp"
#include "arraykit/netmod.hpp"

// Standalone SVG 1.1 documents. Output depends only on the arguments and
// every coordinate is written with 6 significant digits.
namespace arraykit::svg {

struct Curve {
  std::vector<double> x, y;  // drawn in the given order
};

/// W against A, one <circle> per finite spot, optional fitted curve.
std::string wa_plot(const std::vector<double> &A, const std::vector<double> &W, const std::optional<Curve> &curve,
                    const std::string &title);

/// Spot values on the physical chip layout (gridR*printTipR rows by
/// gridC*printTipC columns), one rect of class "spot" per spot.
std::string spatial_plot(const GridGeometry &grid, const std::vector<double> &values, const std::string &title);

std::string boxplot(const std::vector<std::pair<std::string, std::vector<double>>> &groups, const std::string &title);

std::string dendrogram(const Dendrogram &d, const std::string &title);

/// Cells coloured on a symmetric diverging scale around 0; rows and columns
/// drawn in the given orders (empty = natural order).
std::string heatmap(const MatrixD &values, const std::vector<std::string> &rowLabels,
                    const std::vector<std::string> &colLabels, std::vector<std::size_t> rowOrder,
                    std::vector<std::size_t> colOrder, const std::string &title);

std::string volcano(const std::vector<VolcanoPoint> &points, const std::string &title);

/// Genes on a circle in pool order; edges coloured by the sign of their value.
std::string network(const RelNet &net, const std::string &title);

std::string gene_pair(const std::vector<GenePairCondition> &data, const std::string &geneX, const std::string &geneY);

std::string module_map(const ModuleResult &res, const std::string &title);

}  // namespace arraykit::svg
