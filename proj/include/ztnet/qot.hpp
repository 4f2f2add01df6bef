#pragma once

// Gaussian-noise QoT kernel: ASE, closed-form NLI, per-channel GSNR and
// margins. Everything here is a pure function of its inputs.

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "ztnet/topology.hpp"

namespace ztnet {

struct CombChannel {
  double center_thz = 0.0;
  double symbol_rate_gbd = 0.0;
  double power_mw = 0.0;  // at fiber input
};

// P_ase = h*nu*NF*(G-1)*B_ref for the amplifier's flat gain, in mW.
double ase_power_mw(const Amplifier& amp, double center_thz, double ref_bandwidth_ghz);

// Gain seen by a channel at `center_thz` once tilt is applied.
double channel_gain_db(const Amplifier& amp, const ChannelGrid& grid, double center_thz);

// Incoherent GN-model NLI power (mW, in the target's symbol-rate bandwidth)
// generated on one span. SCI plus per-interferer XCI terms; dispersion is
// evaluated at the target frequency.
double nli_power_per_span_mw(const FiberSpan& span, std::span<const CombChannel> comb,
                             std::size_t target);

struct ChannelQot {
  std::string service_id;
  double center_thz = 0.0;
  double signal_mw = 0.0;
  double ase_mw = 0.0;  // rescaled to the signal bandwidth
  double nli_mw = 0.0;
  double gsnr_db = 0.0;
  double received_power_dbm = 0.0;

  bool operator==(const ChannelQot&) const = default;
};

struct QotReport {
  std::vector<ChannelQot> channels;
  double min_gsnr_db = 0.0;
  double mean_gsnr_db = 0.0;

  const ChannelQot* find(const std::string& service_id) const;
  bool operator==(const QotReport&) const = default;
};

// gsnr = 10 log10(signal / (ase + nli)), capped at 60 dB.
double gsnr_db(double signal_mw, double ase_mw, double nli_mw);

struct SpanPower {
  double amp_input_mw = 0.0;
  double amp_output_mw = 0.0;
};

// Total signal power per element of an OMS in one direction of travel.
struct LinkPower {
  std::size_t oms_index = 0;
  bool reversed = false;
  SiteId from = 0;
  SiteId to = 0;
  double input_mw = 0.0;         // entering the first span, before its connector
  std::vector<SpanPower> spans;  // in traversal order
};

struct NetworkQot {
  QotReport report;
  std::vector<LinkPower> links;  // sorted by (oms_index, reversed)
};

// Full propagation of every service in `services` through the plant. Throws
// ValidationError for empty paths or channels overlapping on a shared OMS.
NetworkQot propagate(const NetworkTopology& topo, std::span<const Service> services);

// Report restricted to `targets` (all services when empty); the comb is every
// service passed in.
QotReport estimate_path_qot(const NetworkTopology& topo, std::span<const Service> services,
                            std::span<const std::string> targets = {});

struct ChannelMargin {
  std::string service_id;
  int rate_gbps = 0;
  double gsnr_db = 0.0;
  double required_gsnr_db = 0.0;
  double margin_db = 0.0;
};

struct MarginReport {
  std::vector<ChannelMargin> channels;
  double min_margin_db = 0.0;
};

MarginReport margin(const QotReport& report, const std::map<std::string, int>& rates);

void to_json(nlohmann::json& j, const ChannelQot& c);
void from_json(const nlohmann::json& j, ChannelQot& c);
void to_json(nlohmann::json& j, const QotReport& r);
void from_json(const nlohmann::json& j, QotReport& r);
void to_json(nlohmann::json& j, const ChannelMargin& c);
void from_json(const nlohmann::json& j, ChannelMargin& c);
void to_json(nlohmann::json& j, const MarginReport& r);
void from_json(const nlohmann::json& j, MarginReport& r);

}  // namespace ztnet
