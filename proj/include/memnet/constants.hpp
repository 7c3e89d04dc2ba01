#pragma once

#include <string>
#include <vector>

namespace memnet {

/// Empirical stand-ins for the unspecified per-degree constants of the
/// harmonic construction, calibrated on a reference fixture and frozen.
struct HarmonicConstants {
    int m = 0;
    double cutoff = 0.0;    ///< C with (4 C log n)^{m/2} = projection cutoff
    double variance = 0.0;  ///< C_m with E|g|^2 <= C_m n
    double sampler = 0.0;   ///< C with correlation floor |r|^2 / (2 C sqrt(n gamma^2))
};

struct ConstantsTable {
    std::vector<HarmonicConstants> rows;
    std::string fixture;
    std::string date;
};

/// The table compiled in from data/constants.tsv.
const ConstantsTable& frozen_constants();

/// Throws ParameterError when degree m was not calibrated.
HarmonicConstants constants_for(int m);

/// Tab-separated lines "name<TAB>value<TAB>fixture<TAB>date" with names
/// cutoff_C[m], variance_C[m], sampler_C[m].
std::string constants_to_tsv(const ConstantsTable& table);
ConstantsTable constants_from_tsv(const std::string& text);

}  // namespace memnet
