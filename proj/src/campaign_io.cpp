#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "autoscope/campaign.hpp"
#include "autoscope/io.hpp"

namespace fs = std::filesystem;

namespace autoscope::campaign {

namespace {

using nlohmann::ordered_json;

std::string obs_to_jsonl(const std::vector<scope::Observation>& observations) {
    std::string out;
    for (const auto& o : observations) {
        ordered_json j;
        j["pos_nominal"] = {o.pos_nominal.x, o.pos_nominal.y};
        j["pos_true"] = {o.pos_true.x, o.pos_true.y};
        j["channel"] = scope::channel_name(o.channel);
        j["value"] = o.value;
        j["t_sim"] = o.t_sim;
        out += j.dump();
        out += "\n";
    }
    return out;
}

std::vector<scope::Observation> obs_from_jsonl(const std::string& text) {
    std::vector<scope::Observation> out;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto j = nlohmann::json::parse(line);
        scope::Observation o;
        o.pos_nominal = {j.at("pos_nominal")[0].get<double>(),
                         j.at("pos_nominal")[1].get<double>()};
        o.pos_true = {j.at("pos_true")[0].get<double>(), j.at("pos_true")[1].get<double>()};
        o.channel = scope::channel_from_name(j.at("channel").get<std::string>());
        o.value = j.at("value").get<double>();
        o.t_sim = j.at("t_sim").get<double>();
        out.push_back(o);
    }
    return out;
}

std::string decisions_to_jsonl(const std::vector<DecisionRecord>& decisions) {
    std::string out;
    for (const auto& d : decisions) {
        ordered_json j;
        j["iteration"] = d.iteration;
        j["t_sim"] = d.t_sim;
        j["payload"] = d.payload;
        out += j.dump();
        out += "\n";
    }
    return out;
}

std::vector<DecisionRecord> decisions_from_jsonl(const std::string& text) {
    std::vector<DecisionRecord> out;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto j = ordered_json::parse(line);
        DecisionRecord d;
        d.iteration = j.at("iteration").get<int>();
        d.t_sim = j.at("t_sim").get<double>();
        d.payload = j.at("payload");
        out.push_back(std::move(d));
    }
    return out;
}

std::string events_to_jsonl(const std::vector<feedback::Event>& events) {
    std::string out;
    for (const auto& e : events) {
        ordered_json j;
        j["t_sim"] = e.t_sim;
        j["line"] = e.line;
        j["index"] = e.index;
        j["pos"] = {e.pos.x, e.pos.y};
        j["pulse"] = e.pulses_applied;
        auto& flips = j["flips"] = ordered_json::array();
        for (const auto& f : e.flips) flips.push_back(ordered_json::array({f.x, f.y}));
        out += j.dump();
        out += "\n";
    }
    return out;
}

std::vector<feedback::Event> events_from_jsonl(const std::string& text) {
    std::vector<feedback::Event> out;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto j = nlohmann::json::parse(line);
        feedback::Event e;
        e.t_sim = j.at("t_sim").get<double>();
        e.line = j.at("line").get<std::size_t>();
        e.index = j.at("index").get<std::size_t>();
        e.pos = {j.at("pos")[0].get<double>(), j.at("pos")[1].get<double>()};
        e.pulses_applied = j.at("pulse").get<int>();
        for (const auto& f : j.at("flips"))
            e.flips.push_back({f[0].get<int>(), f[1].get<int>()});
        out.push_back(std::move(e));
    }
    return out;
}

std::string ledger_to_csv(const LatencyLedger& ledger) {
    std::string out = "kind,duration,t_start\n";
    for (const auto& e : ledger.entries()) {
        out += ledger_kind_name(e.kind);
        out += ",";
        out += io::fmt_double(e.duration);
        out += ",";
        out += io::fmt_double(e.t_start);
        out += "\n";
    }
    return out;
}

LatencyLedger ledger_from_csv(const std::string& text) {
    LatencyLedger ledger;
    std::vector<LedgerEntry> entries;
    std::istringstream is(text);
    std::string line;
    std::getline(is, line);  // header
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string kind, dur, start;
        std::getline(ss, kind, ',');
        std::getline(ss, dur, ',');
        std::getline(ss, start, ',');
        entries.push_back({ledger_kind_from_name(kind), std::strtod(dur.c_str(), nullptr),
                           std::strtod(start.c_str(), nullptr)});
    }
    ledger.restore(std::move(entries));
    return ledger;
}

std::string recon_rows_to_csv(const std::vector<ReconRow>& rows) {
    std::string out = "method,n_obs,frac_sampled,rmse,psnr,seed,arm\n";
    for (const auto& r : rows) {
        out += r.method + "," + std::to_string(r.n_obs) + "," + io::fmt_double(r.frac_sampled) +
               "," + io::fmt_double(r.rmse) + "," + io::fmt_double(r.psnr) + "," +
               std::to_string(r.seed) + "," + r.arm + "\n";
    }
    return out;
}

std::vector<ReconRow> recon_rows_from_csv(const std::string& text) {
    std::vector<ReconRow> out;
    std::istringstream is(text);
    std::string line;
    std::getline(is, line);
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string f[7];
        for (auto& s : f) std::getline(ss, s, ',');
        ReconRow r;
        r.method = f[0];
        r.n_obs = std::atoi(f[1].c_str());
        r.frac_sampled = std::strtod(f[2].c_str(), nullptr);
        r.rmse = std::strtod(f[3].c_str(), nullptr);
        r.psnr = std::strtod(f[4].c_str(), nullptr);
        r.seed = std::strtoull(f[5].c_str(), nullptr, 10);
        r.arm = f[6];
        out.push_back(std::move(r));
    }
    return out;
}

std::string q_curve_to_csv(const std::vector<agent::EpisodePoint>& curve) {
    std::string out = "episode,return,epsilon\n";
    for (const auto& p : curve)
        out += std::to_string(p.episode) + "," + io::fmt_double(p.ret) + "," +
               io::fmt_double(p.epsilon) + "\n";
    return out;
}

std::vector<agent::EpisodePoint> q_curve_from_csv(const std::string& text) {
    std::vector<agent::EpisodePoint> out;
    std::istringstream is(text);
    std::string line;
    std::getline(is, line);
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string f[3];
        for (auto& s : f) std::getline(ss, s, ',');
        out.push_back({std::atoi(f[0].c_str()), std::strtod(f[1].c_str(), nullptr),
                       std::strtod(f[2].c_str(), nullptr)});
    }
    return out;
}

std::string pg_curve_to_csv(const std::vector<agent::BatchPoint>& curve) {
    std::string out = "batch,mean_return,grad_norm\n";
    for (const auto& p : curve)
        out += std::to_string(p.batch) + "," + io::fmt_double(p.mean_return) + "," +
               io::fmt_double(p.grad_norm) + "\n";
    return out;
}

std::vector<agent::BatchPoint> pg_curve_from_csv(const std::string& text) {
    std::vector<agent::BatchPoint> out;
    std::istringstream is(text);
    std::string line;
    std::getline(is, line);
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string f[3];
        for (auto& s : f) std::getline(ss, s, ',');
        out.push_back({std::atoi(f[0].c_str()), std::strtod(f[1].c_str(), nullptr),
                       std::strtod(f[2].c_str(), nullptr)});
    }
    return out;
}

}  // namespace

std::string write_outputs(const RunRecord& record, const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw std::runtime_error("write_outputs: cannot create " + dir + ": " + ec.message());

    std::vector<std::pair<std::string, std::string>> files;  // path -> error context
    auto emit_text = [&](const std::string& name, const std::string& text) {
        io::write_text(dir + "/" + name, text);
        files.emplace_back(name, "");
    };

    emit_text("spec.txt", record.spec_text);
    if (!record.observations.empty())
        emit_text("observations.jsonl", obs_to_jsonl(record.observations));
    if (!record.decisions.empty())
        emit_text("decisions.jsonl", decisions_to_jsonl(record.decisions));
    if (!record.ledger.entries().empty()) emit_text("ledger.csv", ledger_to_csv(record.ledger));
    if (!record.recon_rows.empty()) emit_text("metrics.csv", recon_rows_to_csv(record.recon_rows));
    if (!record.q_curve.empty()) emit_text("curve_q.csv", q_curve_to_csv(record.q_curve));
    if (!record.pg_curve.empty()) emit_text("curve_pg.csv", pg_curve_to_csv(record.pg_curve));
    if (!record.events.empty()) emit_text("events.jsonl", events_to_jsonl(record.events));
    if (record.model_dump) emit_text("model.json", record.model_dump->dump(2) + "\n");
    for (const auto& [name, field] : record.fields) {
        io::write_field(field, dir + "/" + name);
        io::write_pgm(field, dir + "/" + name + ".pgm");
        files.emplace_back(name + ".json", "");
        files.emplace_back(name + ".raw", "");
        files.emplace_back(name + ".pgm", "");
    }

    ordered_json manifest;
    manifest["kind"] = record.kind;
    manifest["seed"] = record.seed;
    manifest["failed"] = record.failed;
    manifest["fail_reason"] = record.fail_reason;
    manifest["wall_time_s_advisory"] = record.wall_time_s;
    auto& fields_arr = manifest["fields"] = ordered_json::array();
    for (const auto& [name, field] : record.fields) fields_arr.push_back(name);
    std::sort(files.begin(), files.end());
    auto& files_arr = manifest["files"] = ordered_json::array();
    for (const auto& [name, ctx] : files) {
        const std::string path = dir + "/" + name;
        ordered_json fj;
        fj["path"] = name;
        fj["bytes"] = fs::file_size(path);
        fj["sha256"] = io::sha256_hex(path);
        files_arr.push_back(std::move(fj));
    }
    const std::string manifest_path = dir + "/manifest.json";
    io::write_text(manifest_path, manifest.dump(2) + "\n");
    return manifest_path;
}

RunRecord replay(const std::string& manifest_path) {
    const auto manifest = nlohmann::json::parse(io::read_text(manifest_path));
    const fs::path dir = fs::path(manifest_path).parent_path();

    // verify checksums before touching anything else
    for (const auto& fj : manifest.at("files")) {
        const std::string name = fj.at("path").get<std::string>();
        const std::string path = (dir / name).string();
        if (!fs::exists(path)) throw std::runtime_error("replay: missing file " + name);
        const std::string digest = io::sha256_hex(path);
        if (digest != fj.at("sha256").get<std::string>())
            throw std::runtime_error("replay: checksum mismatch in " + name);
    }

    RunRecord record;
    record.kind = manifest.at("kind").get<std::string>();
    record.seed = manifest.at("seed").get<std::uint64_t>();
    record.failed = manifest.at("failed").get<bool>();
    record.fail_reason = manifest.at("fail_reason").get<std::string>();
    record.wall_time_s = manifest.at("wall_time_s_advisory").get<double>();

    auto have = [&](const std::string& name) {
        for (const auto& fj : manifest.at("files"))
            if (fj.at("path").get<std::string>() == name) return true;
        return false;
    };
    auto text = [&](const std::string& name) { return io::read_text((dir / name).string()); };

    if (have("spec.txt")) record.spec_text = text("spec.txt");
    if (have("observations.jsonl"))
        record.observations = obs_from_jsonl(text("observations.jsonl"));
    if (have("decisions.jsonl")) record.decisions = decisions_from_jsonl(text("decisions.jsonl"));
    if (have("ledger.csv")) record.ledger = ledger_from_csv(text("ledger.csv"));
    if (have("metrics.csv")) record.recon_rows = recon_rows_from_csv(text("metrics.csv"));
    if (have("curve_q.csv")) record.q_curve = q_curve_from_csv(text("curve_q.csv"));
    if (have("curve_pg.csv")) record.pg_curve = pg_curve_from_csv(text("curve_pg.csv"));
    if (have("events.jsonl")) record.events = events_from_jsonl(text("events.jsonl"));
    if (have("model.json")) record.model_dump = ordered_json::parse(text("model.json"));
    for (const auto& name : manifest.at("fields"))
        record.fields.emplace_back(name.get<std::string>(),
                                   io::read_field((dir / name.get<std::string>()).string()));
    return record;
}

void replay_stream(const RunRecord& record,
                   const std::function<void(const scope::Observation&)>& on_obs) {
    std::vector<const scope::Observation*> ptrs;
    ptrs.reserve(record.observations.size());
    for (const auto& o : record.observations) ptrs.push_back(&o);
    std::stable_sort(ptrs.begin(), ptrs.end(),
                     [](const auto* a, const auto* b) { return a->t_sim < b->t_sim; });
    for (const auto* o : ptrs) on_obs(*o);
}

// --- report ---------------------------------------------------------------------

void write_report(const std::string& run_dir, const std::string& out_dir) {
    const RunRecord record = replay(run_dir + "/manifest.json");
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw std::runtime_error("write_report: cannot create " + out_dir);

    std::string summary = "metric,value\n";
    summary += "kind," + record.kind + "\n";
    summary += "seed," + std::to_string(record.seed) + "\n";
    summary += "n_observations," + std::to_string(record.observations.size()) + "\n";
    summary += "n_decisions," + std::to_string(record.decisions.size()) + "\n";
    summary += "simulated_time_s," + io::fmt_double(record.ledger.clock()) + "\n";
    for (int k = 0; k < kLedgerKinds; ++k) {
        const auto kind = static_cast<LedgerKind>(k);
        summary += std::string("ledger_") + ledger_kind_name(kind) + "_s," +
                   io::fmt_double(record.ledger.total(kind)) + "\n";
    }
    const double acq_time = record.ledger.total(LedgerKind::dwell) +
                            record.ledger.total(LedgerKind::travel) +
                            record.ledger.total(LedgerKind::flyback) +
                            record.ledger.total(LedgerKind::spectro);
    if (acq_time > 0.0)
        summary += "decision_over_acquisition," +
                   io::fmt_double(record.ledger.total(LedgerKind::decision) / acq_time) + "\n";
    if (!record.recon_rows.empty()) {
        const auto& last = record.recon_rows.back();
        summary += "final_rmse," + io::fmt_double(last.rmse) + "\n";
        summary += "final_psnr," + io::fmt_double(last.psnr) + "\n";
    }
    summary += "wall_time_s_advisory," + io::fmt_double(record.wall_time_s) + "\n";
    io::write_text(out_dir + "/summary.csv", summary);

    // rmse vs budget per arm (bench) or single series (bo)
    if (!record.recon_rows.empty()) {
        std::vector<io::ChartSeries> series;
        for (const auto& row : record.recon_rows) {
            const std::string name = row.arm.empty() ? row.method : row.arm;
            auto it = std::find_if(series.begin(), series.end(),
                                   [&](const auto& s) { return s.name == name; });
            if (it == series.end()) {
                series.push_back({name, {}});
                it = series.end() - 1;
            }
            it->points.emplace_back(row.n_obs, row.rmse);
        }
        io::write_line_chart_svg(out_dir + "/rmse_vs_budget.svg", "reconstruction error",
                                 "measurements", "rmse", series);
    }
    if (!record.q_curve.empty()) {
        io::ChartSeries s{"episode return", {}};
        for (const auto& p : record.q_curve) s.points.emplace_back(p.episode, p.ret);
        io::write_line_chart_svg(out_dir + "/learning_curve.svg", "double Q learning curve",
                                 "episode", "discounted return", {s});
    }
    if (!record.pg_curve.empty()) {
        io::ChartSeries s{"mean batch return", {}};
        for (const auto& p : record.pg_curve) s.points.emplace_back(p.batch, p.mean_return);
        io::write_line_chart_svg(out_dir + "/learning_curve.svg", "policy gradient curve",
                                 "batch", "mean return", {s});
    }

    // sampled-point overlay on the truth field, when both exist
    const ScalarField2D* truth = nullptr;
    for (const auto& [name, f] : record.fields)
        if (name == "truth" || name == "polarization_pre") truth = &f;
    if (truth && !record.observations.empty()) {
        ScalarField2D overlay = *truth;
        const double hi = overlay.max_value() + 1.0;
        const GridGeom geom = overlay.geom();
        for (const auto& o : record.observations) {
            const Pixel p = geom.nearest(o.pos_nominal);
            overlay.at(p) = hi;
        }
        io::write_pgm(overlay, out_dir + "/sampled_overlay.pgm");
    }
}

}  // namespace autoscope::campaign
