// Acceptance harness: drives the full simulator end to end and prints one
// verdict line per criterion. Every tolerance is pinned here, in code, so a
// regression shows up as a [FAIL] line rather than a silently loosened bound.
// The process exit code is the number of failed criteria.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "gtwin/attitude.hpp"
#include "gtwin/bits.hpp"
#include "gtwin/config.hpp"
#include "gtwin/crc.hpp"
#include "gtwin/dynamics.hpp"
#include "gtwin/epc.hpp"
#include "gtwin/harvest.hpp"
#include "gtwin/link.hpp"
#include "gtwin/maneuver.hpp"
#include "gtwin/node.hpp"
#include "gtwin/rng.hpp"
#include "gtwin/rotors.hpp"
#include "gtwin/scenario.hpp"
#include "gtwin/station.hpp"
#include "gtwin/vectors.hpp"

namespace fs = std::filesystem;
using namespace gtwin;

namespace {

int g_failures = 0;

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(4);
    os << v;
    return os.str();
}

void criterion(int idx, const std::string& what, const std::function<bool(std::string&)>& body) {
    std::string detail;
    bool ok = false;
    try {
        ok = body(detail);
    } catch (const std::exception& e) {
        ok = false;
        detail = std::string("unexpected exception: ") + e.what();
    }
    std::cout << (ok ? "[PASS] " : "[FAIL] ") << idx << ". " << what;
    if (!detail.empty()) std::cout << " (" << detail << ")";
    std::cout << std::endl;
    if (!ok) ++g_failures;
}

std::string config_path(const char* name) {
    return std::string(GTWIN_CONFIG_DIR) + "/" + name;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

double euler_component(const EulerAngles& e, SweepAxis axis) {
    switch (axis) {
        case SweepAxis::Roll: return e.roll_deg;
        case SweepAxis::Pitch: return e.pitch_deg;
        default: return e.yaw_deg;
    }
}

// Hold one pose for `dwell` seconds, inventorying on the reader cadence, and
// return the circular mean of the swept Euler component across the decoded
// estimates (NaN when fewer than min_reads decode).
double held_angle_mean_deg(const ScenarioConfig& cfg, const LinkGeometry& geom, SweepAxis axis,
                           double angle_deg, double dwell, long min_reads) {
    Eigen::Quaterniond pose = axis_pose(axis, angle_deg);
    TagNode node = cfg.node_proto;
    node.harvester.energy = node.harvester.e_on();
    node.harvester.fsm = NodeFsm::Active;
    node.rng = Rng(cfg.seed).fork(static_cast<std::uint64_t>(axis) * 1000 +
                                  static_cast<std::uint64_t>(angle_deg));
    Rng air = Rng(cfg.seed).fork(500000 + static_cast<std::uint64_t>(angle_deg));
    ImuTruth truth = static_truth(pose);
    double p_fwd = forward_power_dbm(geom, pose);

    long round_every = std::llround(cfg.timing.round_period / cfg.timing.sim_dt);
    long steps = std::llround(dwell / cfg.timing.sim_dt);
    double ssin = 0, scos = 0;
    long n = 0;
    for (long k = 0; k < steps; ++k) {
        if (k % round_every == 0) {
            LinkSample s = attempt_read(geom, truth, node, cfg.timing,
                                        static_cast<double>(k) * cfg.timing.sim_dt, air);
            if (s.success && s.payload) {
                AttitudeEstimate est =
                    estimate_attitude(*s.payload, node.imu, node.field, s.t, s.rssi_dbm);
                if (est.valid) {
                    double c = deg2rad(euler_component(est.euler, axis));
                    ssin += std::sin(c);
                    scos += std::cos(c);
                    ++n;
                }
            }
        }
        node.harvest(p_fwd, cfg.timing.sim_dt);
    }
    if (n < min_reads) return std::numeric_limits<double>::quiet_NaN();
    return rad2deg(std::atan2(ssin, scos));
}

// Textbook CRC long division, duplicated here so the acceptance check does
// not lean on the test suite: append width zero bits, fold the preset into
// the leading bits, divide, complement if asked.
std::uint32_t crc_oracle(const BitSeq& msg, std::uint32_t poly, int width, std::uint32_t preset,
                         bool complement) {
    BitSeq work = msg;
    work.insert(work.end(), static_cast<std::size_t>(width), 0);
    for (int i = 0; i < width; ++i)
        work[static_cast<std::size_t>(i)] ^=
            static_cast<std::uint8_t>((preset >> (width - 1 - i)) & 1);
    for (std::size_t i = 0; i + static_cast<std::size_t>(width) < work.size(); ++i) {
        if (!work[i]) continue;
        work[i] = 0;
        for (int j = 0; j < width; ++j)
            work[i + 1 + static_cast<std::size_t>(j)] ^=
                static_cast<std::uint8_t>((poly >> (width - 1 - j)) & 1);
    }
    std::uint32_t rem = 0;
    for (int j = 0; j < width; ++j)
        rem = (rem << 1) |
              work[work.size() - static_cast<std::size_t>(width) + static_cast<std::size_t>(j)];
    if (complement) rem ^= (1u << width) - 1u;
    return rem;
}

BitSeq random_bits(Rng& rng, std::size_t n) {
    BitSeq b(n);
    for (auto& bit : b) bit = static_cast<std::uint8_t>(rng.u64() & 1);
    return b;
}

bool criterion_attitude_accuracy(std::string& detail) {
    ScenarioConfig cfg = load_config(config_path("paper_sweep.json"));
    LinkGeometry geom = cfg.link;
    geom.mount = MountConfig::Parallel;
    double worst = 0;
    std::string worst_at = "none";
    for (SweepAxis axis : {SweepAxis::Roll, SweepAxis::Pitch, SweepAxis::Yaw}) {
        for (int i = 0; i < 24; ++i) {
            double angle = 15.0 * i;
            double mean = held_angle_mean_deg(cfg, geom, axis, angle, 2.0, 10);
            if (!std::isfinite(mean)) {
                detail = std::string("too few reads at ") + axis_name(axis) + " " + fmt(angle);
                return false;
            }
            EulerAngles canon = euler_from_quat(axis_pose(axis, angle));
            double err = std::abs(angle_diff_deg(mean, euler_component(canon, axis)));
            if (err > worst) {
                worst = err;
                worst_at = std::string(axis_name(axis)) + " " + fmt(angle) + " deg";
            }
        }
    }
    detail = "worst mean error " + fmt(worst) + " deg at " + worst_at + ", bound 2";
    return worst <= 2.0;
}

bool criterion_accel_repeatability(std::string& detail) {
    ScenarioConfig cfg = load_config(config_path("paper_maneuver.json"));
    std::vector<std::vector<AttitudeEstimate>> runs;
    std::vector<TruthSample> truth;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        cfg.seed = seed;
        FlightOutputs out = simulate_flight(cfg, FailureEvent{});
        if (truth.empty()) truth = std::move(out.truth);
        runs.push_back(std::move(out.estimates));
    }
    MetricsReport rep = compute_metrics(runs, truth, cfg.scenario.duration_s, cfg.station);
    detail = "worst per-tick sigma " + fmt(rep.accel_repeatability_ms2) +
             " m/s^2 across 5 seeds, bound 0.5";
    return std::isfinite(rep.accel_repeatability_ms2) && rep.accel_repeatability_ms2 <= 0.5;
}

bool criterion_sweep_envelope(std::string& detail) {
    ScenarioConfig cfg = load_config(config_path("paper_sweep.json"));
    Rng base(cfg.seed);
    double rate_min = std::numeric_limits<double>::infinity();
    double rate_max = -std::numeric_limits<double>::infinity();
    double rssi_min = std::numeric_limits<double>::infinity();
    double rssi_max = -std::numeric_limits<double>::infinity();
    double boresight = std::numeric_limits<double>::quiet_NaN();
    double roll_min_parallel = std::numeric_limits<double>::infinity();
    double roll_min_perp = std::numeric_limits<double>::infinity();
    bool rssi_finite = true;
    for (MountConfig mount : {MountConfig::Parallel, MountConfig::Perpendicular}) {
        LinkGeometry geom = cfg.link;
        geom.mount = mount;
        for (SweepAxis axis : {SweepAxis::Roll, SweepAxis::Pitch, SweepAxis::Yaw}) {
            auto rows = orientation_sweep(axis, geom, cfg.node_proto, cfg.timing,
                                          cfg.scenario.sweep.step_deg, base);
            for (const auto& r : rows) {
                rate_min = std::min(rate_min, r.rate_hz);
                rate_max = std::max(rate_max, r.rate_hz);
                if (std::isfinite(r.mean_rssi_dbm)) {
                    rssi_min = std::min(rssi_min, r.mean_rssi_dbm);
                    rssi_max = std::max(rssi_max, r.mean_rssi_dbm);
                } else {
                    rssi_finite = false;
                }
                if (mount == MountConfig::Parallel && axis == SweepAxis::Roll) {
                    roll_min_parallel = std::min(roll_min_parallel, r.rate_hz);
                    if (r.angle_deg == 0.0) boresight = r.rate_hz;
                }
                if (mount == MountConfig::Perpendicular && axis == SweepAxis::Roll)
                    roll_min_perp = std::min(roll_min_perp, r.rate_hz);
            }
        }
    }
    detail = "rates [" + fmt(rate_min) + ", " + fmt(rate_max) + "] Hz, boresight " +
             fmt(boresight) + " Hz, RSSI [" + fmt(rssi_min) + ", " + fmt(rssi_max) + "] dBm";
    bool ok = rate_min >= 1.0 && rate_max <= 62.5;
    ok = ok && std::isfinite(boresight) && boresight >= 10.0;
    ok = ok && rssi_finite && rssi_min >= -41.22 && rssi_max <= 17.56;
    // The broadside-locked mount must hold a read rate the cross mount's
    // deepest fade cannot approach.
    ok = ok && roll_min_perp > 0.0 && roll_min_perp <= roll_min_parallel / 5.0;
    return ok;
}

bool criterion_codec(std::string& detail) {
    Rng rng(41);
    for (int trial = 0; trial < 10000; ++trial) {
        BitSeq msg = random_bits(rng, 1 + rng.below(64));
        if (crc5(msg) != crc_oracle(msg, kCrc5Poly, 5, kCrc5Preset, false)) {
            detail = "crc5 disagrees with the long-division oracle";
            return false;
        }
    }
    for (int trial = 0; trial < 10000; ++trial) {
        BitSeq msg = random_bits(rng, rng.below(96));
        std::uint16_t serial = crc16(msg);
        if (serial != crc_oracle(msg, kCrc16Poly, 16, kCrc16Preset, true) ||
            serial != crc16_table(msg)) {
            detail = "crc16 routes disagree with the oracle";
            return false;
        }
    }
    for (int trial = 0; trial < 10000; ++trial) {
        BitSeq framed = random_bits(rng, 1 + rng.below(64));
        append_bits(framed, crc5(framed), 5);
        framed[rng.below(static_cast<std::uint32_t>(framed.size()))] ^= 1u;
        if (crc5(framed) == 0) {
            detail = "crc5 missed a single-bit flip";
            return false;
        }
    }
    for (int trial = 0; trial < 10000; ++trial) {
        BitSeq framed = random_bits(rng, 1 + rng.below(96));
        append_bits(framed, crc16(framed), 16);
        framed[rng.below(static_cast<std::uint32_t>(framed.size()))] ^= 1u;
        if (crc16(framed) == kCrc16Residue) {
            detail = "crc16 missed a single-bit flip";
            return false;
        }
    }
    for (int trial = 0; trial < 100000; ++trial) {
        SensorPayload p;
        for (int i = 0; i < 3; ++i) {
            p.accel[static_cast<std::size_t>(i)] =
                static_cast<std::int16_t>(static_cast<int>(rng.below(4096)) - 2048);
            p.mag[static_cast<std::size_t>(i)] =
                static_cast<std::int16_t>(static_cast<int>(rng.below(4096)) - 2048);
        }
        p.counter = static_cast<std::uint8_t>(rng.below(256));
        p.status = static_cast<std::uint8_t>(rng.below(256));
        TagReply wire = decode_reply(encode_reply(TagReply{make_epc_block(p)}));
        const auto* block = std::get_if<EpcBlockReply>(&wire);
        if (!block || block->pc != kSensorPc || !(decode_sensor_epc(block->epc) == p)) {
            detail = "EPC block round-trip corrupted a payload";
            return false;
        }
    }
    if (slurp(GTWIN_VECTORS_FILE) != render_vector_file()) {
        detail = "committed golden vectors differ from the current codec";
        return false;
    }
    detail = "10k oracle matches per CRC, 10k flips detected per CRC, 100k round-trips, vectors reproduced";
    return true;
}

bool criterion_integrator(std::string& detail) {
    InertiaModel im;
    im.bearing_b.setZero();
    im.gyro_coupling = false;

    // Constant yaw torque from rest: rate and angle follow the closed form.
    Eigen::Vector3d tau(0, 0, 1e-5);
    AttitudeState s;
    for (int k = 0; k < 1000; ++k) s = step(s, tau, im, 1e-3);
    double jz = im.j_total().z();
    double wz_expect = tau.z() / jz;
    double yaw_expect = rad2deg(0.5 * tau.z() / jz);
    double rate_rel = std::abs(s.omega.z() - wz_expect) / wz_expect;
    double yaw_rel =
        std::abs(angle_diff_deg(euler_from_quat(s.q).yaw_deg, yaw_expect)) / yaw_expect;
    if (rate_rel > 1e-3 || yaw_rel > 1e-3) {
        detail = "constant-torque closed form missed: rate rel " + fmt(rate_rel) +
                 ", angle rel " + fmt(yaw_rel);
        return false;
    }

    // Torque-free tumble: world angular momentum is conserved and the
    // quaternion stays unit length.
    AttitudeState t;
    t.omega = Eigen::Vector3d(1.5, -2.0, 1.0);
    Eigen::Vector3d l0 = t.q * im.j_total().cwiseProduct(t.omega).eval();
    double max_norm_err = 0, max_drift = 0;
    StepDiag diag;
    for (int k = 0; k < 10000; ++k) {
        t = step(t, Eigen::Vector3d::Zero(), im, 1e-3, 200.0, &diag);
        max_norm_err = std::max(max_norm_err, std::abs(1.0 - t.q.norm()));
        max_drift = std::max(max_drift, diag.q_drift);
    }
    Eigen::Vector3d l1 = t.q * im.j_total().cwiseProduct(t.omega).eval();
    double l_rel = (l1 - l0).norm() / l0.norm();
    if (l_rel > 1e-6) {
        detail = "momentum drifted " + fmt(l_rel) + " relative over 10 s";
        return false;
    }
    if (max_norm_err > 1e-12 || max_drift > 1e-9) {
        detail = "quaternion norm drifted: post-renorm " + fmt(max_norm_err) + ", pre-renorm " +
                 fmt(max_drift);
        return false;
    }

    // Step halving on a closed-loop tumble: the trajectories converge.
    ManeuverScript script;
    script.segments.push_back({0.0, 2.0, 1.0, true, Eigen::Vector3d(0, 150, 150)});
    script.duration = 2.0;
    Eigen::Quaterniond q_coarse, q_fine;
    {
        FlightSim sim(script, RotorSet{}, InertiaModel{}, ControllerGains{}, 1e-3);
        q_coarse = run_maneuver(sim, 2.0).back().q;
    }
    {
        FlightSim sim(script, RotorSet{}, InertiaModel{}, ControllerGains{}, 5e-4);
        q_fine = run_maneuver(sim, 2.0).back().q;
    }
    double halving = quat_angle_rad(q_coarse, q_fine);
    if (!(halving <= 1e-4)) {
        detail = "step halving left " + fmt(halving) + " rad between trajectories";
        return false;
    }
    detail = "closed form rel " + fmt(std::max(rate_rel, yaw_rel)) + ", momentum rel " +
             fmt(l_rel) + ", halving gap " + fmt(halving) + " rad";
    return true;
}

bool criterion_rotor_failure(std::string& detail) {
    ScenarioConfig cfg = load_config(config_path("rotor_failure.json"));
    FlightOutputs out = simulate_flight(cfg, cfg.scenario.failure);
    int spin0 = cfg.dynamics.rotors.spin[static_cast<std::size_t>(cfg.scenario.failure.rotor)];
    double t_fail = cfg.scenario.failure.t;
    double prev_mag = -1.0;
    double last_wz = 0;
    long in_window = 0;
    for (const auto& s : out.truth) {
        if (s.t <= t_fail || s.t > t_fail + 0.5 + 1e-9) continue;
        ++in_window;
        double wz = s.omega.z();
        // Give the rotor a few time constants to actually lose speed before
        // judging the sign.
        if (s.t >= t_fail + 0.05 && spin0 * wz >= 0.0) {
            detail = "yaw rate sign failed at t " + fmt(s.t) + ": wz " + fmt(wz);
            return false;
        }
        if (std::abs(wz) < prev_mag - 1e-12) {
            detail = "|wz| shrank at t " + fmt(s.t);
            return false;
        }
        prev_mag = std::abs(wz);
        last_wz = wz;
    }
    detail = fmt(in_window) + " samples in the half second after failure, wz ends at " +
             fmt(last_wz) + " rad/s";
    return in_window >= 45 && std::abs(last_wz) > 0.05;
}

bool criterion_energy(std::string& detail) {
    // Harvester slab: random power and spends, the ledger always balances and
    // the stored energy stays inside the physical envelope.
    HarvesterState h;
    NodePowerModel pm;
    EnergyLedger led;
    Rng rng(97);
    double worst_rel = 0;
    for (int k = 0; k < 10000; ++k) {
        double p = -30.0 + 45.0 * rng.uniform();
        harvest_step(h, pm, p, 1e-3, led);
        if (rng.uniform() < 0.2) try_spend(h, pm.e_reply, led);
        double balance = std::abs(led.harvested - led.consumed - led.discarded - h.energy);
        worst_rel = std::max(worst_rel, balance / std::max(1.0, led.harvested));
        if (h.energy < 0.0 || h.energy > h.e_max()) {
            detail = "stored energy left [0, e_max] at step " + fmt(k);
            return false;
        }
    }
    if (worst_rel > 1e-12) {
        detail = "ledger imbalance " + fmt(worst_rel) + " relative";
        return false;
    }

    // Protocol slab: under random power and traffic the tag never replies
    // from an unpowered state, and its own ledger balances too.
    TagNode node;
    node.rng = Rng(11);
    Rng traffic(13);
    ImuTruth truth = static_truth(Eigen::Quaterniond::Identity());
    long replies = 0;
    for (int k = 0; k < 10000; ++k) {
        node.harvest(-20.0 + 30.0 * traffic.uniform(), 1e-3);
        bool active_before = node.harvester.fsm == NodeFsm::Active;
        ReaderCommand cmd;
        switch (traffic.below(3)) {
            case 0: {
                QueryCommand q;
                q.q = 1;
                cmd = q;
                break;
            }
            case 1: cmd = QueryRepCommand{}; break;
            default:
                cmd = AckCommand{node.rn16_valid ? node.rn16
                                                 : static_cast<std::uint16_t>(0x1234)};
                break;
        }
        auto reply = node.respond(cmd, truth);
        if (reply && !active_before) {
            detail = "tag replied while unpowered at step " + fmt(k);
            return false;
        }
        if (reply) ++replies;
    }
    double node_balance = std::abs(node.ledger.harvested - node.ledger.consumed -
                                   node.ledger.discarded - node.harvester.energy);
    if (node_balance > 1e-12 * std::max(1.0, node.ledger.harvested)) {
        detail = "tag ledger imbalance " + fmt(node_balance) + " J";
        return false;
    }
    detail = "ledger rel error " + fmt(worst_rel) + ", " + fmt(replies) +
             " replies all from the Active state";
    return replies > 0;
}

bool criterion_determinism(std::string& detail) {
    fs::path base = fs::temp_directory_path() / "gtwin_acceptance";
    fs::remove_all(base);
    fs::create_directories(base);

    auto flight_pair = [&](const char* cfg_name, const char* scenario, bool with_failure,
                           const std::string& tag) {
        std::vector<fs::path> dirs;
        for (int pass = 0; pass < 2; ++pass) {
            ScenarioConfig cfg = load_config(config_path(cfg_name));
            fs::path dir = base / (tag + "_" + std::to_string(pass));
            cfg.out_dir = dir.string();
            run_flight_scenario(cfg, scenario, with_failure ? cfg.scenario.failure : FailureEvent{});
            dirs.push_back(dir);
        }
        return dirs;
    };
    auto man_dirs = flight_pair("paper_maneuver.json", "maneuver", false, "man");
    auto rf_dirs = flight_pair("rotor_failure.json", "rotor_failure", true, "rf");
    for (const char* name : {"truth.csv", "estimates.csv", "metrics.json"}) {
        if (slurp(man_dirs[0] / name) != slurp(man_dirs[1] / name)) {
            detail = std::string("maneuver ") + name + " differs between runs";
            return false;
        }
        if (slurp(rf_dirs[0] / name) != slurp(rf_dirs[1] / name)) {
            detail = std::string("rotor_failure ") + name + " differs between runs";
            return false;
        }
    }

    std::vector<fs::path> sweep_dirs;
    for (int pass = 0; pass < 2; ++pass) {
        ScenarioConfig cfg = load_config(config_path("paper_sweep.json"));
        fs::path dir = base / ("sweep_" + std::to_string(pass));
        cfg.out_dir = dir.string();
        run_sweep_scenario(cfg);
        sweep_dirs.push_back(dir);
    }
    auto panels = gtwin::detail::find_sweep_files(sweep_dirs[0].string());
    if (panels.size() != 6) {
        detail = "expected 6 sweep panels, found " + std::to_string(panels.size());
        return false;
    }
    panels.push_back("metrics.json");
    for (const auto& name : panels) {
        if (slurp(sweep_dirs[0] / name) != slurp(sweep_dirs[1] / name)) {
            detail = "sweep " + name + " differs between runs";
            return false;
        }
    }
    fs::remove_all(base);
    detail = "all three scenarios byte-identical across repeated runs";
    return true;
}

}  // namespace

int main() {
    criterion(1, "held-angle attitude estimates stay within 2 deg of truth",
              criterion_attitude_accuracy);
    criterion(2, "smoothed accel repeatability across 5 seeded tumbles stays within 0.5 m/s^2",
              criterion_accel_repeatability);
    criterion(3, "orientation sweep rates stay in [1, 62.5] Hz with boresight >= 10 Hz and "
                 "RSSI inside the budget envelope",
              criterion_sweep_envelope);
    criterion(4, "codec CRCs match the long-division oracle, detect single-bit flips, and "
                 "EPC blocks round-trip against the committed vectors",
              criterion_codec);
    criterion(5, "integrator reproduces closed forms, conserves momentum, and converges "
                 "under step halving",
              criterion_integrator);
    criterion(6, "losing a rotor yanks yaw against the failed rotor's spin with monotone "
                 "growth through the transient",
              criterion_rotor_failure);
    criterion(7, "every joule is accounted for and the tag only ever replies while Active",
              criterion_energy);
    criterion(8, "bundled scenarios are byte-for-byte deterministic",
              criterion_determinism);
    return g_failures;
}
