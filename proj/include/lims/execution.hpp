#pragma once

namespace lims {

/// Selects between the OpenMP kernel and its serial reference.
enum class Execution { serial, parallel };

}  // namespace lims
