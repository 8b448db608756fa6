#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "tilln/conditions.hpp"
#include "tilln/kernel.hpp"

namespace tilln {

/// Kernel family plus the drift data that ships with it.
struct Model {
    std::string name;
    FiniteKernelFamily family;
    DriftSpec drift;
};

/// Built-in models:
///   two_state_sinusoid   states {1,2}; the step into time n has rows
///                        (1-a(n), a(n)) and (b(n), 1-b(n)) with
///                        a(n) = 1/3 + sin(n)/6, b(n) = 1/4 + cos(n)/8.
///                        Default V = 2.
///   three_state_cycle    states {1,2,3}; constant rows (e1+e2)/2,
///                        (e2+e3)/2, (e3+e1)/2. Contracting, no minorization.
///   four_state_staircase states {1,2,3,4}, V = (1,2,8,16), R = 6; a drift
///                        test bed whose small set {1,2} is a strict subset.
/// Throws std::invalid_argument for an unknown name.
Model builtin_model(std::string_view name);
std::vector<std::string> builtin_model_names();

/// Parses a model definition (JSON text). Either
///   {"name": ..., "states": [...], "rows": [[entry, ...], ...], "drift": {...}}
/// with entries that are numbers, the string "rest" (one minus the other
/// entries of the row), or waveforms
///   {"wave": "constant"|"sin"|"cos", "offset": o, "amplitude": a,
///    "frequency": f, "phase": p, "shift": s}  ->  o + a * w(f * (n + s) + p),
/// or {"states": [...], "window": [n0, n1], "matrices": [M_n0, ..., M_n1]}.
/// Throws std::invalid_argument with a description of the first problem.
Model load_model(std::string_view json_text);

}  // namespace tilln
