#include "ztnet/qot.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <tuple>

#include "ztnet/common.hpp"

namespace ztnet {

using nlohmann::json;

double ase_power_mw(const Amplifier& amp, double center_thz, double ref_bandwidth_ghz) {
  const double photon_energy = constants::kPlanck * center_thz * 1e12;
  const double nf = db_to_lin(amp.noise_figure_db);
  const double excess_gain = std::max(db_to_lin(amp.gain_db) - 1.0, 0.0);
  return photon_energy * nf * excess_gain * ref_bandwidth_ghz * 1e9 * 1e3;
}

double channel_gain_db(const Amplifier& amp, const ChannelGrid& grid, double center_thz) {
  return amp.gain_db + amp.tilt_db * (center_thz - grid.mid_thz()) / grid.bandwidth_thz();
}

double nli_power_per_span_mw(const FiberSpan& span, std::span<const CombChannel> comb,
                             std::size_t target) {
  if (comb.empty()) throw ValidationError("empty comb");
  if (target >= comb.size()) throw ValidationError("target channel not in comb");
  for (const auto& ch : comb) {
    if (!(ch.symbol_rate_gbd > 0.0)) throw ValidationError("zero bandwidth channel in comb");
  }
  if (span.gamma_per_w_km == 0.0) return 0.0;

  using std::numbers::pi;
  const double alpha = span.attenuation_db_per_km * std::numbers::ln10 / 10.0 / 1e3;  // 1/m
  const double length = span.length_km * 1e3;
  const double l_eff = -std::expm1(-alpha * length) / alpha;
  const double l_asym = 1.0 / alpha;
  const double gamma = span.gamma_per_w_km / 1e3;  // 1/(W m)

  const auto& cut = comb[target];
  const double f_cut = cut.center_thz * 1e12;
  const double wavelength = constants::kSpeedOfLight / f_cut;
  const double dispersion = span.dispersion_ps_nm_km * 1e-6;  // s/m^2
  const double beta2 = dispersion * wavelength * wavelength / (2.0 * pi * constants::kSpeedOfLight);
  if (!(beta2 > 0.0)) throw ValidationError("zero dispersion span");

  const double b_cut = cut.symbol_rate_gbd * 1e9;
  const double psd_cut = cut.power_mw * 1e-3 / b_cut;
  const double k = pi * pi * l_asym * beta2;

  double acc = 0.0;
  for (std::size_t j = 0; j < comb.size(); ++j) {
    const auto& ch = comb[j];
    const double b_j = ch.symbol_rate_gbd * 1e9;
    const double psd_j = ch.power_mw * 1e-3 / b_j;
    double psi = 0.0;
    if (j == target) {
      psi = std::asinh(0.5 * k * b_cut * b_cut);
    } else {
      const double df = ch.center_thz * 1e12 - f_cut;
      psi = std::asinh(k * b_cut * (df + 0.5 * b_j)) - std::asinh(k * b_cut * (df - 0.5 * b_j));
    }
    acc += psd_j * psd_j * psi;
  }
  const double prefactor =
      (16.0 / 27.0) * (gamma * l_eff) * (gamma * l_eff) / (2.0 * pi * beta2 * l_asym);
  const double g_nli = prefactor * psd_cut * acc;  // W/Hz
  return g_nli * b_cut * 1e3;
}

double gsnr_db(double signal_mw, double ase_mw, double nli_mw) {
  const double noise = ase_mw + nli_mw;
  if (!(noise > 0.0)) return constants::kGsnrCapDb;
  return std::min(constants::kGsnrCapDb, lin_to_db(signal_mw / noise));
}

const ChannelQot* QotReport::find(const std::string& service_id) const {
  for (const auto& c : channels) {
    if (c.service_id == service_id) return &c;
  }
  return nullptr;
}

namespace {

// (oms index, element index in storage order, reversed)
using SpanKey = std::tuple<std::size_t, std::size_t, bool>;

struct Visit {
  SpanKey key;
  FiberSpan span;  // connectors already oriented for the direction of travel
  Amplifier amp;
  std::size_t traversal_pos = 0;
};

std::vector<Visit> visits_for(const NetworkTopology& topo, const Service& svc) {
  std::vector<Visit> out;
  for (const auto& hop : hop_chain(topo, svc.path)) {
    const auto& oms = topo.omses[hop.oms_index];
    const std::size_t n = oms.elements.size();
    for (std::size_t p = 0; p < n; ++p) {
      const std::size_t idx = hop.reversed ? n - 1 - p : p;
      Visit v{SpanKey{hop.oms_index, idx, hop.reversed}, oms.elements[idx].span,
              oms.elements[idx].amp, p};
      if (hop.reversed) std::swap(v.span.connector_loss_in_db, v.span.connector_loss_out_db);
      out.push_back(v);
    }
  }
  return out;
}

void check_overlaps(const NetworkTopology& topo, std::span<const Service> services) {
  struct Use {
    int start;
    int end;
    const std::string* id;
  };
  std::vector<std::vector<Use>> per_oms(topo.omses.size());
  for (const auto& s : services) {
    const int start = slice_index_of(topo.grid, s.center_thz, s.width_slices);
    for (const auto& hop : hop_chain(topo, s.path)) {
      for (const auto& u : per_oms[hop.oms_index]) {
        if (start < u.end && u.start < start + s.width_slices) {
          throw ValidationError("channel overlap: " + *u.id + " and " + s.id + " share a slice");
        }
      }
      per_oms[hop.oms_index].push_back(Use{start, start + s.width_slices, &s.id});
    }
  }
}

}  // namespace

NetworkQot propagate(const NetworkTopology& topo, std::span<const Service> services) {
  for (const auto& s : services) {
    if (s.path.size() < 2) throw ValidationError("empty path for service " + s.id);
  }
  check_overlaps(topo, services);

  std::vector<std::vector<Visit>> visits;
  visits.reserve(services.size());
  for (const auto& s : services) visits.push_back(visits_for(topo, s));

  // Pass 1: signal power profile of every channel, building the per-span comb
  // and the per-link total powers.
  std::map<SpanKey, std::vector<CombChannel>> combs;
  std::vector<std::vector<std::size_t>> comb_pos(services.size());
  std::map<std::pair<std::size_t, bool>, LinkPower> links;

  for (std::size_t i = 0; i < services.size(); ++i) {
    const auto& svc = services[i];
    double p = dbm_to_mw(svc.launch_power_dbm);
    for (const auto& v : visits[i]) {
      const double p_fiber = p * db_to_lin(-v.span.connector_loss_in_db);
      auto& comb = combs[v.key];
      comb_pos[i].push_back(comb.size());
      comb.push_back(CombChannel{svc.center_thz, svc.symbol_rate_gbd, p_fiber});

      const double p_amp_in =
          p_fiber * db_to_lin(-(v.span.fiber_loss_db() + v.span.connector_loss_out_db));
      const double p_out = p_amp_in * db_to_lin(channel_gain_db(v.amp, topo.grid, svc.center_thz));

      const auto link_key = std::make_pair(std::get<0>(v.key), std::get<2>(v.key));
      auto [it, inserted] = links.try_emplace(link_key);
      if (inserted) {
        const auto& oms = topo.omses[link_key.first];
        it->second.oms_index = link_key.first;
        it->second.reversed = link_key.second;
        it->second.from = link_key.second ? oms.b : oms.a;
        it->second.to = link_key.second ? oms.a : oms.b;
        it->second.spans.resize(oms.elements.size());
      }
      if (v.traversal_pos == 0) it->second.input_mw += p;
      it->second.spans[v.traversal_pos].amp_input_mw += p_amp_in;
      it->second.spans[v.traversal_pos].amp_output_mw += p_out;
      p = p_out;
    }
  }

  // Pass 2: accumulate ASE and NLI along each path; both ride along with the
  // signal through every later loss and gain.
  NetworkQot out;
  out.report.channels.reserve(services.size());
  for (std::size_t i = 0; i < services.size(); ++i) {
    const auto& svc = services[i];
    double sig = dbm_to_mw(svc.launch_power_dbm);
    double ase = 0.0;  // in the ASE reference bandwidth
    double nli = 0.0;  // in the signal bandwidth
    for (std::size_t k = 0; k < visits[i].size(); ++k) {
      const auto& v = visits[i][k];
      const double connector_in = db_to_lin(-v.span.connector_loss_in_db);
      sig *= connector_in;
      ase *= connector_in;
      nli *= connector_in;

      nli += nli_power_per_span_mw(v.span, combs.at(v.key), comb_pos[i][k]);

      const double fiber = db_to_lin(-(v.span.fiber_loss_db() + v.span.connector_loss_out_db));
      const double g_db = channel_gain_db(v.amp, topo.grid, svc.center_thz);
      const double gain = db_to_lin(g_db);
      sig *= fiber * gain;
      ase *= fiber * gain;
      nli *= fiber * gain;
      ase += ase_power_mw(Amplifier{g_db, v.amp.noise_figure_db, 0.0}, svc.center_thz,
                          constants::kAseReferenceBandwidthGhz);
    }
    ChannelQot c;
    c.service_id = svc.id;
    c.center_thz = svc.center_thz;
    c.signal_mw = sig;
    c.ase_mw = ase * svc.symbol_rate_gbd / constants::kAseReferenceBandwidthGhz;
    c.nli_mw = nli;
    c.gsnr_db = gsnr_db(c.signal_mw, c.ase_mw, c.nli_mw);
    c.received_power_dbm = mw_to_dbm(sig);
    out.report.channels.push_back(std::move(c));
  }

  for (auto& [key, link] : links) out.links.push_back(std::move(link));
  auto& ch = out.report.channels;
  if (!ch.empty()) {
    double sum = 0.0;
    double lo = ch.front().gsnr_db;
    for (const auto& c : ch) {
      sum += c.gsnr_db;
      lo = std::min(lo, c.gsnr_db);
    }
    out.report.min_gsnr_db = lo;
    out.report.mean_gsnr_db = sum / static_cast<double>(ch.size());
  }
  return out;
}

QotReport estimate_path_qot(const NetworkTopology& topo, std::span<const Service> services,
                            std::span<const std::string> targets) {
  auto full = propagate(topo, services).report;
  if (targets.empty()) return full;
  QotReport out;
  for (const auto& id : targets) {
    const auto* c = full.find(id);
    if (!c) throw ValidationError("target service " + id + " not in comb");
    out.channels.push_back(*c);
  }
  double sum = 0.0;
  double lo = out.channels.front().gsnr_db;
  for (const auto& c : out.channels) {
    sum += c.gsnr_db;
    lo = std::min(lo, c.gsnr_db);
  }
  out.min_gsnr_db = lo;
  out.mean_gsnr_db = sum / static_cast<double>(out.channels.size());
  return out;
}

MarginReport margin(const QotReport& report, const std::map<std::string, int>& rates) {
  MarginReport out;
  for (const auto& c : report.channels) {
    const auto it = rates.find(c.service_id);
    if (it == rates.end()) throw ValidationError("no rate for channel " + c.service_id);
    const auto& spec = rate_spec(it->second);
    out.channels.push_back(ChannelMargin{c.service_id, spec.rate_gbps, c.gsnr_db,
                                         spec.required_gsnr_db,
                                         c.gsnr_db - spec.required_gsnr_db});
  }
  if (!out.channels.empty()) {
    out.min_margin_db = std::min_element(out.channels.begin(), out.channels.end(),
                                         [](const auto& a, const auto& b) {
                                           return a.margin_db < b.margin_db;
                                         })->margin_db;
  }
  return out;
}

// ---------------------------------------------------------------------------

void to_json(json& j, const ChannelQot& c) {
  j = json{{"service_id", c.service_id}, {"center_thz", c.center_thz},
           {"signal_mw", c.signal_mw},   {"ase_mw", c.ase_mw},
           {"nli_mw", c.nli_mw},         {"gsnr_db", c.gsnr_db},
           {"received_power_dbm", c.received_power_dbm}};
}

void from_json(const json& j, ChannelQot& c) {
  j.at("service_id").get_to(c.service_id);
  j.at("center_thz").get_to(c.center_thz);
  j.at("signal_mw").get_to(c.signal_mw);
  j.at("ase_mw").get_to(c.ase_mw);
  j.at("nli_mw").get_to(c.nli_mw);
  j.at("gsnr_db").get_to(c.gsnr_db);
  j.at("received_power_dbm").get_to(c.received_power_dbm);
}

void to_json(json& j, const QotReport& r) {
  j = json{{"channels", r.channels},
           {"min_gsnr_db", r.min_gsnr_db},
           {"mean_gsnr_db", r.mean_gsnr_db}};
}

void from_json(const json& j, QotReport& r) {
  j.at("channels").get_to(r.channels);
  j.at("min_gsnr_db").get_to(r.min_gsnr_db);
  j.at("mean_gsnr_db").get_to(r.mean_gsnr_db);
}

void to_json(json& j, const ChannelMargin& c) {
  j = json{{"service_id", c.service_id},
           {"rate_gbps", c.rate_gbps},
           {"gsnr_db", c.gsnr_db},
           {"required_gsnr_db", c.required_gsnr_db},
           {"margin_db", c.margin_db}};
}

void from_json(const json& j, ChannelMargin& c) {
  j.at("service_id").get_to(c.service_id);
  j.at("rate_gbps").get_to(c.rate_gbps);
  j.at("gsnr_db").get_to(c.gsnr_db);
  j.at("required_gsnr_db").get_to(c.required_gsnr_db);
  j.at("margin_db").get_to(c.margin_db);
}

void to_json(json& j, const MarginReport& r) {
  j = json{{"channels", r.channels}, {"min_margin_db", r.min_margin_db}};
}

void from_json(const json& j, MarginReport& r) {
  j.at("channels").get_to(r.channels);
  j.at("min_margin_db").get_to(r.min_margin_db);
}

}  // namespace ztnet
