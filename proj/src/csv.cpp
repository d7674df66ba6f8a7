#include "ceitr/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace ceitr::csv {

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& field) {
  double v = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  while (first < last && (*first == ' ' || *first == '\t')) ++first;
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last) {
    throw std::invalid_argument("bad numeric field '" + field + "'");
  }
  return v;
}

std::int64_t parse_int(const std::string& field) {
  std::int64_t v = 0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  while (first < last && (*first == ' ' || *first == '\t')) ++first;
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last) {
    throw std::invalid_argument("bad integer field '" + field + "'");
  }
  return v;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);  // binary: no newline surprises
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
  return in;
}

}  // namespace

void write_cohort_csv(const std::string& path, const Cohort& cohort) {
  auto out = open_out(path);
  const std::size_t p = cohort.n_covariates();
  const std::size_t J =
      cohort.subjects.empty() ? 0 : cohort.subjects.front().cost_history.size();
  out << "id,a,u,delta,total_cost";
  for (std::size_t k = 1; k <= p; ++k) out << ",x" << k;
  for (std::size_t j = 1; j <= J; ++j) out << ",m_" << j;
  out << "\n";
  for (const auto& s : cohort.subjects) {
    if (s.x.size() != p || s.cost_history.size() != J) {
      throw std::invalid_argument("ragged cohort rows cannot be serialized");
    }
    out << s.id << ',' << s.a << ',' << format_double(s.u) << ',' << s.delta
        << ',' << format_double(s.total_cost);
    for (double v : s.x) out << ',' << format_double(v);
    for (double m : s.cost_history) out << ',' << format_double(m);
    out << "\n";
  }
}

Cohort read_cohort_csv(const std::string& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error("empty cohort file '" + path + "'");
  }
  const auto header = split_line(line);
  std::size_t p = 0, J = 0;
  const std::vector<std::string> fixed{"id", "a", "u", "delta", "total_cost"};
  if (header.size() < fixed.size()) {
    throw std::runtime_error("cohort header too short in '" + path + "'");
  }
  for (std::size_t k = 0; k < fixed.size(); ++k) {
    if (header[k] != fixed[k]) {
      throw std::runtime_error("unexpected cohort column '" + header[k] +
                               "', wanted '" + fixed[k] + "'");
    }
  }
  for (std::size_t k = fixed.size(); k < header.size(); ++k) {
    if (header[k].rfind("x", 0) == 0 && header[k].rfind("m_", 0) != 0) {
      ++p;
    } else if (header[k].rfind("m_", 0) == 0) {
      ++J;
    } else {
      throw std::runtime_error("unexpected cohort column '" + header[k] + "'");
    }
  }
  Cohort cohort;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_line(line);
    if (f.size() != fixed.size() + p + J) {
      throw std::runtime_error("row " + std::to_string(line_no) + " has " +
                               std::to_string(f.size()) + " fields, expected " +
                               std::to_string(fixed.size() + p + J));
    }
    Subject s;
    s.id = parse_int(f[0]);
    s.a = static_cast<int>(parse_int(f[1]));
    s.u = parse_double(f[2]);
    s.delta = static_cast<int>(parse_int(f[3]));
    s.total_cost = parse_double(f[4]);
    s.x.reserve(p);
    for (std::size_t k = 0; k < p; ++k) s.x.push_back(parse_double(f[5 + k]));
    s.cost_history.reserve(J);
    for (std::size_t j = 0; j < J; ++j) {
      s.cost_history.push_back(parse_double(f[5 + p + j]));
    }
    // Death status is not serialized (no consumer of external cohorts
    // needs it); treat completeness as the best available stand-in.
    s.death_observed = s.delta;
    cohort.subjects.push_back(std::move(s));
  }
  return cohort;
}

void write_potentials_csv(const std::string& path,
                          const std::vector<PotentialOutcomes>& potentials) {
  auto out = open_out(path);
  out << "id,t0,t1,m0,m1,y0,y1,g_opt\n";
  for (std::size_t i = 0; i < potentials.size(); ++i) {
    const auto& po = potentials[i];
    out << (i + 1) << ',' << format_double(po.t0) << ',' << format_double(po.t1)
        << ',' << format_double(po.m0) << ',' << format_double(po.m1) << ','
        << format_double(po.y0) << ',' << format_double(po.y1) << ','
        << po.g_opt << "\n";
  }
}

std::vector<PotentialOutcomes> read_potentials_csv(const std::string& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error("empty potentials file '" + path + "'");
  }
  if (split_line(line).size() != 8) {
    throw std::runtime_error("unexpected potentials header in '" + path + "'");
  }
  std::vector<PotentialOutcomes> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_line(line);
    if (f.size() != 8) {
      throw std::runtime_error("bad potentials row in '" + path + "'");
    }
    PotentialOutcomes po;
    po.t0 = parse_double(f[1]);
    po.t1 = parse_double(f[2]);
    po.m0 = parse_double(f[3]);
    po.m1 = parse_double(f[4]);
    po.y0 = parse_double(f[5]);
    po.y1 = parse_double(f[6]);
    po.g_opt = static_cast<int>(parse_int(f[7]));
    po.delta_y = po.y1 - po.y0;
    out.push_back(po);
  }
  return out;
}

void write_weights_csv(const std::string& path,
                       const std::vector<std::int64_t>& ids,
                       const WeightVector& weights) {
  if (ids.size() != weights.size()) {
    throw std::invalid_argument("id count does not match weight count");
  }
  auto out = open_out(path);
  out << "id,delta_t,delta_m,w,z,abs_w\n";
  for (std::size_t i = 0; i < ids.size(); ++i) {
    out << ids[i] << ',' << format_double(weights.delta_t_hat[i]) << ','
        << format_double(weights.delta_m_hat[i]) << ','
        << format_double(weights.w_hat[i]) << ',' << weights.z[i] << ','
        << format_double(weights.abs_w[i]) << "\n";
  }
}

}  // namespace ceitr::csv
