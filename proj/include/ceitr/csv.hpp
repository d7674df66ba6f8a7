#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ceitr/core.hpp"

namespace ceitr::csv {

// Shortest decimal string that round-trips the exact double value, so
// rewriting a file with the same data is byte-identical.
std::string format_double(double v);

double parse_double(const std::string& field);
std::int64_t parse_int(const std::string& field);

// Split one CSV line on commas (fields are numeric; no quoting).
std::vector<std::string> split_line(const std::string& line);

// Cohort file: header id,a,u,delta,total_cost,x1..xp[,m_1..m_J].
void write_cohort_csv(const std::string& path, const Cohort& cohort);
Cohort read_cohort_csv(const std::string& path);

// Counterfactual file: header id,t0,t1,m0,m1,y0,y1,g_opt.
void write_potentials_csv(const std::string& path,
                          const std::vector<PotentialOutcomes>& potentials);
std::vector<PotentialOutcomes> read_potentials_csv(const std::string& path);

// Weight file: header id,delta_t,delta_m,w,z,abs_w.
void write_weights_csv(const std::string& path,
                       const std::vector<std::int64_t>& ids,
                       const WeightVector& weights);

}  // namespace ceitr::csv
