import json, pathlib
# Regenerates include/aghf/cases.hpp from configs/*.json.
root = pathlib.Path(__file__).resolve().parent.parent
meta = {
 'parallel_parking': ('Parallel parking of the constant-velocity unicycle, straight sketch.', 120,
    [('action_monotone','A1',1e-8),('endpoint_error_max','A6',0.02),('bound_dominates','A8',0),('complement_suppression','A9',1e-8),('grid_order_min','A12',1.7)]),
 'dynamic_unicycle': ('Dynamic unicycle, partial sinusoid sketch.', 120,
    [('action_monotone','A1',1e-8),('complement_suppression','A9',1e-8),('endpoint_error_max','A10',0.05)]),
 'constrained_v': ('Dynamic extension of the kinematic unicycle with |u1| < 2.', 120,
    [('action_monotone','A1',1e-8),('strictly_feasible','A11',0),('near_bound_fraction_min','A11',0.3)]),
 'constrained_steer': ('Dynamic extension of the kinematic unicycle with |u2| < pi/2.', 120,
    [('action_monotone','A1',1e-8),('strictly_feasible','A11',0),('near_bound_fraction_min','A11',0.3)]),
 'ghf_sanity': ('Single integrator with a flat metric; the straight sketch is already steady.', 10,
    [('action_monotone','A1',1e-8),('complement_suppression','A9',1e-8)]),
 'driftless_unicycle': ('Kinematic unicycle sideways shift from a sinusoidal sketch; no drift.', 60,
    [('action_monotone','A1',1e-8),('complement_suppression','A9',1e-8)]),
}
out = []
for name,(desc,budget,checks) in meta.items():
    txt = (root/'configs'/f'{name}.json').read_text()
    json.loads(txt)
    cks = ', '.join('{"%s", "%s", %r}' % c for c in checks)
    out.append(f'''  {{"{name}", "{desc}", {budget}.0, {{{cks}}},
   R"json({txt})json"}},''')
body = '\n'.join(out)
hdr = f'''#pragma once

#include "aghf/config.hpp"
#include "aghf/error.hpp"

#include <string>
#include <vector>

namespace aghf {{

/// A named scalar check on a bundled run; `criterion` is the acceptance id.
struct ExpectedCheck {{
  std::string name;
  std::string criterion;
  double threshold = 0.0;
}};

struct BenchmarkCase {{
  std::string name;
  std::string description;
  double wall_budget_s = 0.0;
  std::vector<ExpectedCheck> expected;
  RunConfig config;
}};

namespace detail {{

struct CaseSource {{
  const char* name;
  const char* description;
  double wall_budget_s;
  std::vector<ExpectedCheck> expected;
  const char* config_json;
}};

// Same documents as configs/<name>.json.
inline const std::vector<CaseSource>& case_sources() {{
  static const std::vector<CaseSource> sources = {{
{body}
  }};
  return sources;
}}

}}  // namespace detail

inline std::vector<std::string> case_names() {{
  std::vector<std::string> out;
  for (const auto& c : detail::case_sources()) out.emplace_back(c.name);
  return out;
}}

inline BenchmarkCase load_case(const std::string& name) {{
  for (const auto& c : detail::case_sources()) {{
    if (name != c.name) continue;
    return {{c.name, c.description, c.wall_budget_s, c.expected, parse_run_config(json::parse(c.config_json))}};
  }}
  std::string valid;
  for (const auto& n : case_names()) valid += (valid.empty() ? "" : ", ") + n;
  throw Error(ErrorCategory::lookup, "unknown case '" + name + "'; valid names: " + valid);
}}

}}  // namespace aghf
'''
(root/'include/aghf/cases.hpp').write_text(hdr)
