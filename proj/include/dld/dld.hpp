#ifndef DLD_DLD_HPP
#define DLD_DLD_HPP

#include "dld/error.hpp"
#include "dld/rng.hpp"
#include "dld/margin.hpp"
#include "dld/interval_set.hpp"
#include "dld/defenses.hpp"
#include "dld/geometry.hpp"
#include "dld/victims.hpp"
#include "dld/generators.hpp"
#include "dld/attacks.hpp"
#include "dld/harness.hpp"
#include "dld/config.hpp"
#include "dld/report.hpp"

#endif  // DLD_DLD_HPP
