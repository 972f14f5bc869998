#pragma once

#include <cstdint>
#include <optional>

namespace modeller {

// Event counts for one (CSV, target) relation. Only updated while the
// target is observed.
struct RelationStats {
    std::uint64_t n_target_observed = 0;
    std::uint64_t n_ss = 0;
    std::uint64_t n_incidence = 0;
    std::uint64_t n_concurrence = 0;

    void record(bool ss, bool incidence, bool observed) {
        if (!observed) return;
        ++n_target_observed;
        if (ss) ++n_ss;
        if (incidence) ++n_incidence;
        if (ss && incidence) ++n_concurrence;
    }

    bool operator==(const RelationStats&) const = default;
};

// Normalized causal effect; nullopt when n_incidence or n_ss is zero.
inline std::optional<double> nce(const RelationStats& s) {
    if (s.n_incidence == 0 || s.n_ss == 0 || s.n_target_observed == 0) return std::nullopt;
    const double p_i = static_cast<double>(s.n_incidence) / static_cast<double>(s.n_target_observed);
    const double p_i_ss = static_cast<double>(s.n_concurrence) / static_cast<double>(s.n_ss);
    return (p_i_ss - p_i) / p_i;
}

inline bool nce_insignificant(const RelationStats& s, double eps_T) {
    auto v = nce(s);
    return v && (*v < 0 ? -*v : *v) < eps_T;
}

// P(SS | I). nullopt without incidences.
inline std::optional<double> ss_given_incidence(const RelationStats& s) {
    if (s.n_incidence == 0) return std::nullopt;
    return static_cast<double>(s.n_concurrence) / static_cast<double>(s.n_incidence);
}

// MNR filter: true when the conditioner should be removed.
inline bool mnr_filter_remove(const RelationStats& s, double eps_sign) {
    auto r = ss_given_incidence(s);
    return r && *r < eps_sign;
}

// P(I | SS), 0 without satisfactions.
inline double incidence_given_ss(const RelationStats& s) {
    if (s.n_ss == 0) return 0.0;
    return static_cast<double>(s.n_concurrence) / static_cast<double>(s.n_ss);
}

}  // namespace modeller
