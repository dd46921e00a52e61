#pragma once

#include <cmath>
#include <string>

#include "stac/error.hpp"
#include "stac/linalg.hpp"
#include "stac/rng.hpp"
#include "stac/serialize.hpp"

namespace stac {

enum class FeatureKind { CenteredOnehot, RandomBounded, Custom };

inline const char* to_string(FeatureKind k) {
    switch (k) {
    case FeatureKind::CenteredOnehot: return "centered_onehot";
    case FeatureKind::RandomBounded: return "random_bounded";
    case FeatureKind::Custom: return "custom";
    }
    return "custom";
}

/// Precomputed state features phi: row s of `table` is phi(s), with
/// ||phi(s)|| <= 1 for every state.
struct FeatureMap {
    int dim = 0;
    Mat table;  // n_states x dim
    FeatureKind kind = FeatureKind::Custom;

    int n_states() const { return static_cast<int>(table.rows()); }
};

inline Vec phi(const FeatureMap& map, int s) {
    require(s >= 0 && s < map.n_states(), ErrorKind::Parameter, "phi: state out of range");
    return map.table.row(s).transpose();
}

/// Centered one-hot features expressed in a Helmert basis of the mean-zero
/// subspace: phi(s) is the coordinate vector of (e_s - 1/n) normalized, so
/// d = n-1, every row has unit norm, and the table has full column rank.
/// Expressing the map in basis form (rather than keeping d = n redundant
/// coordinates) keeps the constant direction out of the parameter space as
/// well; otherwise A_theta picks up a zero eigenvalue along the table's null
/// vector and Assumption 1 fails. For n = 2 this is exactly the +-1 fixture
/// map.
inline FeatureMap make_centered_onehot(int n_states) {
    require(n_states >= 2, ErrorKind::Parameter, "make_centered_onehot: need n_states >= 2");
    FeatureMap map;
    map.dim = n_states - 1;
    map.kind = FeatureKind::CenteredOnehot;
    const double n = static_cast<double>(n_states);
    Mat helmert = Mat::Zero(n_states, n_states - 1);
    for (int k = 0; k < n_states - 1; ++k) {
        const double kk = static_cast<double>(k + 1);
        const double scale = 1.0 / std::sqrt(kk * (kk + 1.0));
        for (int s = 0; s <= k; ++s) helmert(s, k) = scale;
        helmert(k + 1, k) = -kk * scale;
    }
    map.table = helmert / std::sqrt(1.0 - 1.0 / n);
    return map;
}

/// Rows sampled with standard normal entries, then scaled to unit norm.
/// Deterministic in (arguments, seed).
inline FeatureMap make_random_bounded(int n_states, int dim, std::uint64_t seed) {
    require(n_states >= 1, ErrorKind::Parameter, "make_random_bounded: need n_states >= 1");
    require(dim >= 1, ErrorKind::Parameter, "make_random_bounded: need dim >= 1");
    FeatureMap map;
    map.dim = dim;
    map.kind = FeatureKind::RandomBounded;
    map.table = Mat(n_states, dim);
    Mt64Stream rng(seed);
    for (int s = 0; s < n_states; ++s) {
        for (int j = 0; j < dim; ++j) {
            // Box-Muller from two explicit uniforms; std::normal_distribution
            // is not bit-stable across standard libraries.
            const double u1 = std::max(rng.next(), 0x1.0p-53);
            const double u2 = rng.next();
            map.table(s, j) = std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
        }
        const double norm = map.table.row(s).norm();
        if (norm > 0.0) map.table.row(s) /= norm;
        else map.table(s, 0) = 1.0;
    }
    return map;
}

inline FeatureMap make_custom(Mat table) {
    FeatureMap map;
    map.dim = static_cast<int>(table.cols());
    map.kind = FeatureKind::Custom;
    map.table = std::move(table);
    for (int s = 0; s < map.n_states(); ++s)
        require(map.table.row(s).norm() <= 1.0 + 1e-12, ErrorKind::Parameter,
                "make_custom: feature norm exceeds 1 at state " + std::to_string(s));
    return map;
}

/// d = 1 fixture paired with make_m2(): phi(0) = +1, phi(1) = -1.
inline FeatureMap make_m2_fixture_features() {
    Mat table(2, 1);
    table << 1.0, -1.0;
    FeatureMap map = make_custom(std::move(table));
    return map;
}

inline json features_to_json(const FeatureMap& map) {
    return json{{"kind", to_string(map.kind)}, {"dim", map.dim}, {"table", mat_to_json(map.table)}};
}

inline FeatureMap features_from_json(const json& j) {
    FeatureMap map;
    map.dim = j.at("dim").get<int>();
    map.table = mat_from_json(j.at("table"));
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "centered_onehot") map.kind = FeatureKind::CenteredOnehot;
    else if (kind == "random_bounded") map.kind = FeatureKind::RandomBounded;
    else map.kind = FeatureKind::Custom;
    require(map.table.cols() == map.dim, ErrorKind::Parameter, "features_from_json: dim mismatch");
    return map;
}

} // namespace stac
