#pragma once

#include <cmath>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "shrinklab/chart.hpp"
#include "shrinklab/errors.hpp"

namespace shrinklab {

enum class ModelKind { Sphere, Plane, Cylinder, CliffordTorus, MinimalInSphere, Custom };

/// A catalog entry: the chart plus the analytic flags the verdict machinery
/// relies on.  Immutable after construction and safe to share.
struct ModelCatalogEntry {
    ModelKind kind = ModelKind::Custom;
    std::string name;
    int n = 0;  // intrinsic dimension
    int p = 0;  // codimension
    int k = 0;  // spherical factor dimension (cylinders)
    bool closed = false;
    bool parallel_principal_normal = false;
    bool minimal_in_sphere = false;
    bool polynomial_growth = true;  // custom noncompact charts must assert this
    std::shared_ptr<const ImmersionChart> chart;
};

inline ModelCatalogEntry make_sphere(int n, int p, std::optional<double> radius = std::nullopt) {
    if (n < 1 || p < 1) throw ModelError("sphere requires n >= 1, p >= 1");
    const double r = radius.value_or(std::sqrt(double(n)));
    ModelCatalogEntry m;
    m.kind = ModelKind::Sphere;
    m.name = "sphere(" + std::to_string(n) + "," + std::to_string(p) + ")";
    if (radius) m.name += "[r=" + std::to_string(r) + "]";
    m.n = n;
    m.p = p;
    m.closed = true;
    m.parallel_principal_normal = true;
    m.minimal_in_sphere = !radius || std::abs(r - std::sqrt(double(n))) < 1e-14;
    m.chart = std::make_shared<SphereChart>(n, p, r);
    return m;
}

inline ModelCatalogEntry make_plane(int n, int p) {
    if (n < 1 || p < 1) throw ModelError("plane requires n >= 1, p >= 1");
    ModelCatalogEntry m;
    m.kind = ModelKind::Plane;
    m.name = "plane(" + std::to_string(n) + "," + std::to_string(p) + ")";
    m.n = n;
    m.p = p;
    m.closed = false;
    m.parallel_principal_normal = true;  // H = 0; the flag is vacuous but harmless
    m.chart = std::make_shared<PlaneChart>(n, p);
    return m;
}

inline ModelCatalogEntry make_cylinder(int k, int n, int p) {
    if (k < 1 || n <= k || p < 1) throw ModelError("cylinder requires 1 <= k < n, p >= 1");
    ModelCatalogEntry m;
    m.kind = ModelKind::Cylinder;
    m.name = "cylinder(" + std::to_string(k) + "," + std::to_string(n) + "," +
             std::to_string(p) + ")";
    m.n = n;
    m.p = p;
    m.k = k;
    m.closed = false;
    m.parallel_principal_normal = true;
    m.chart = std::make_shared<CylinderChart>(k, n, p);
    return m;
}

inline ModelCatalogEntry make_clifford_torus() {
    ModelCatalogEntry m;
    m.kind = ModelKind::CliffordTorus;
    m.name = "clifford_torus";
    m.n = 2;
    m.p = 2;
    m.closed = true;
    m.parallel_principal_normal = true;
    m.minimal_in_sphere = true;
    m.chart = std::make_shared<CliffordTorusChart>();
    return m;
}

inline ModelCatalogEntry make_minimal_in_sphere(std::shared_ptr<const ImmersionChart> chart,
                                                const std::string& name, bool closed = true) {
    ModelCatalogEntry m;
    m.kind = ModelKind::MinimalInSphere;
    m.name = name;
    m.n = chart->intrinsic_dim();
    m.p = chart->codim();
    m.closed = closed;
    m.parallel_principal_normal = true;
    m.minimal_in_sphere = true;
    m.chart = std::move(chart);
    return m;
}

inline ModelCatalogEntry make_custom(std::shared_ptr<const ImmersionChart> chart,
                                     const std::string& name, bool closed,
                                     bool polynomial_growth = true) {
    ModelCatalogEntry m;
    m.kind = ModelKind::Custom;
    m.name = name;
    m.n = chart->intrinsic_dim();
    m.p = chart->codim();
    m.closed = closed;
    m.polynomial_growth = polynomial_growth;
    m.chart = std::move(chart);
    return m;
}

/// Per-file overrides carried alongside a parsed model.
struct ModelFileOverrides {
    std::vector<int> res;       // per-factor node counts; empty = defaults
    std::optional<double> trunc;
};

/// Parses the plain-text key-value model format.  Accepted keys:
///   kind   sphere | plane | cylinder | clifford_torus
///   n, p, k        integers
///   radius         sphere radius override
///   res            single count or comma list (per-factor override)
///   trunc          Euclidean truncation half-width
/// Lines starting with '#' are comments.  Unknown keys are rejected.
inline std::pair<ModelCatalogEntry, ModelFileOverrides> parse_model_text(std::istream& in,
                                                                         const std::string& src) {
    std::string kind;
    int n = 0, p = 0, k = 0;
    std::optional<double> radius;
    ModelFileOverrides ov;

    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        // strip comments and '='
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        for (char& c : line)
            if (c == '=') c = ' ';
        std::istringstream ls(line);
        std::string key;
        if (!(ls >> key)) continue;
        std::string value;
        std::getline(ls, value);
        const auto first = value.find_first_not_of(" \t");
        value = (first == std::string::npos) ? "" : value.substr(first);
        const auto last = value.find_last_not_of(" \t\r");
        if (last != std::string::npos) value.erase(last + 1);

        auto as_int = [&](const std::string& v) {
            try {
                return std::stoi(v);
            } catch (...) {
                throw ConfigError(src + ":" + std::to_string(lineno) + ": bad integer '" + v + "'");
            }
        };
        auto as_double = [&](const std::string& v) {
            try {
                return std::stod(v);
            } catch (...) {
                throw ConfigError(src + ":" + std::to_string(lineno) + ": bad number '" + v + "'");
            }
        };

        if (key == "kind") kind = value;
        else if (key == "n") n = as_int(value);
        else if (key == "p") p = as_int(value);
        else if (key == "k") k = as_int(value);
        else if (key == "radius") radius = as_double(value);
        else if (key == "trunc") ov.trunc = as_double(value);
        else if (key == "res") {
            std::string item;
            std::istringstream vs(value);
            while (std::getline(vs, item, ',')) ov.res.push_back(as_int(item));
        } else {
            throw ConfigError(src + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
        }
    }

    if (kind == "sphere") return {make_sphere(n, p, radius), ov};
    if (kind == "plane") return {make_plane(n, p), ov};
    if (kind == "cylinder") return {make_cylinder(k, n, p), ov};
    if (kind == "clifford_torus") return {make_clifford_torus(), ov};
    throw ConfigError(src + ": unknown or missing kind '" + kind + "'");
}

inline std::pair<ModelCatalogEntry, ModelFileOverrides> parse_model_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open model file '" + path + "'");
    return parse_model_text(in, path);
}

}  // namespace shrinklab
