#include "vaxalloc/trace_io.hpp"

#include <charconv>
#include <fstream>
#include <stdexcept>

namespace vaxalloc {

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

namespace {

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

}  // namespace

void write_trace_csv(const std::filesystem::path& path, const EpisodeResult& result) {
  std::ofstream out = open_for_write(path);
  out << "t,zone,S,I,R,p_susc,p_inf,p_rec,x_vac,x_test,observed,n_vac,n_test,new_infections\n";
  for (const StepRecord& r : result.steps) {
    for (Index z = 0; z < r.susceptible.size(); ++z) {
      out << r.t << ',' << z << ',' << format_double(r.susceptible(z)) << ',' << format_double(r.infected(z)) << ','
          << format_double(r.removed(z)) << ',' << format_double(r.p_susc(z)) << ',' << format_double(r.p_inf(z))
          << ',' << format_double(r.p_rec(z)) << ',' << r.x_vac(z) << ',' << r.x_test(z) << ',' << r.observed(z)
          << ',' << r.n_vac << ',' << r.n_test << ',' << format_double(r.new_infections(z)) << '\n';
    }
  }
}

void write_curves_csv(const std::filesystem::path& path, const std::vector<PolicySummary>& summaries) {
  std::ofstream out = open_for_write(path);
  out << "policy,t,mean_new_infections,mean_cumulative_infections,mean_vaccine_supply\n";
  for (const PolicySummary& s : summaries) {
    for (std::size_t t = 0; t < s.mean_new_infections.size(); ++t) {
      out << s.name << ',' << t << ',' << format_double(s.mean_new_infections[t]) << ','
          << format_double(s.mean_cumulative[t]) << ',' << format_double(s.mean_vaccine_supply[t]) << '\n';
    }
  }
}

void write_tuning_csv(const std::filesystem::path& path, const TuneResult& result) {
  std::ofstream out = open_for_write(path);
  out << "policy,theta0,theta1,theta_risk,rho,mean,sd,best\n";
  for (std::size_t i = 0; i < result.rows.size(); ++i) {
    const TuneRow& row = result.rows[i];
    const VaccinePolicy& v = row.policy.vaccine;
    std::string theta0;
    std::string theta1;
    std::string risk;
    if (const auto* pfa = std::get_if<PfaPolicy>(&v)) {
      theta0 = format_double(pfa->params.theta0);
      theta1 = format_double(pfa->params.theta1);
    } else if (const auto* dla = std::get_if<DlaPolicy>(&v)) {
      risk = format_double(dla->theta_risk);
    }
    const std::string rho = row.policy.testing ? format_double(row.policy.testing->rho) : "";
    out << policy_name(v) << ',' << theta0 << ',' << theta1 << ',' << risk << ',' << rho << ','
        << format_double(row.mean) << ',' << format_double(row.sd) << ',' << (i == result.best ? 1 : 0) << '\n';
  }
}

}  // namespace vaxalloc
