#include "imabc/checkpoint.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "imabc/errors.hpp"

namespace imabc {

namespace {

using json = nlohmann::json;

constexpr int format_version = 1;

json encode(double x)
{
    if (std::isnan(x)) return nullptr;
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    return x;
}

double decode(const json& j)
{
    if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        throw config_error("checkpoint: bad number '" + s + "'");
    }
    return j.get<double>();
}

json encode(const std::vector<double>& v)
{
    json a = json::array();
    for (double x : v) a.push_back(encode(x));
    return a;
}

std::vector<double> decode_vec(const json& j)
{
    std::vector<double> v;
    v.reserve(j.size());
    for (const auto& x : j) v.push_back(decode(x));
    return v;
}

std::string status_name(point_status s)
{
    switch (s) {
    case point_status::accepted: return "accepted";
    case point_status::rejected: return "rejected";
    case point_status::pruned: return "pruned";
    }
    return "rejected";
}

point_status parse_status(const std::string& s)
{
    if (s == "accepted") return point_status::accepted;
    if (s == "pruned") return point_status::pruned;
    if (s == "rejected") return point_status::rejected;
    throw config_error("checkpoint: unknown point status '" + s + "'");
}

json encode(const engine_config& c)
{
    return {{"n_init", c.n_init},     {"n_centers", c.n_centers}, {"batch_per_center", c.batch_per_center},
            {"n_post", c.n_post},     {"seed", c.seed},           {"max_iterations", c.max_iterations}};
}

engine_config decode_config(const json& j)
{
    engine_config c;
    c.n_init = j.at("n_init").get<std::size_t>();
    c.n_centers = j.at("n_centers").get<std::size_t>();
    c.batch_per_center = j.at("batch_per_center").get<std::size_t>();
    c.n_post = j.at("n_post").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.max_iterations = j.at("max_iterations").get<std::size_t>();
    return c;
}

json encode_matrix(const Eigen::MatrixXd& m)
{
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(encode(m(r, c)));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd decode_matrix(const json& j)
{
    const auto n = static_cast<Eigen::Index>(j.size());
    Eigen::MatrixXd m(n, n);
    for (Eigen::Index r = 0; r < n; ++r) {
        const auto& row = j.at(static_cast<std::size_t>(r));
        if (static_cast<Eigen::Index>(row.size()) != n) throw config_error("checkpoint: covariance is not square");
        for (Eigen::Index c = 0; c < n; ++c) m(r, c) = decode(row.at(static_cast<std::size_t>(c)));
    }
    return m;
}

} // namespace

std::string checkpoint_to_string(const engine_state& s)
{
    json j;
    j["format"] = "imabc-checkpoint";
    j["version"] = format_version;
    j["config"] = encode(s.config);
    j["iteration"] = s.iteration;
    j["n_total"] = s.n_total;
    j["converged"] = s.converged;
    j["ess"] = encode(s.ess);
    j["alphas"] = encode(s.tolerance.alphas);
    j["group_evaluations"] = s.group_evaluations;

    json hist = json::array();
    for (const auto& a : s.tolerance_history) hist.push_back(encode(a));
    j["tolerance_history"] = std::move(hist);

    json recs = json::array();
    for (const auto& r : s.history)
        recs.push_back({{"iteration", r.iteration},
                        {"n_total", r.n_total},
                        {"n_drawn", r.n_drawn},
                        {"n_drawn_accepted", r.n_drawn_accepted},
                        {"n_centers_demoted", r.n_centers_demoted},
                        {"n_pruned", r.n_pruned},
                        {"n_accepted", r.n_accepted},
                        {"acceptance_rate", encode(r.acceptance_rate)},
                        {"ess", encode(r.ess)}});
    j["history"] = std::move(recs);

    json kernels = json::array();
    for (const auto& k : s.kernels) {
        std::vector<double> mean(k.mean().data(), k.mean().data() + k.mean().size());
        kernels.push_back({{"mean", encode(mean)}, {"covariance", encode_matrix(k.covariance())}});
    }
    j["kernels"] = std::move(kernels);

    json pts = json::array();
    for (const auto& p : s.points)
        pts.push_back({{"index", p.index},
                       {"theta", encode(p.theta)},
                       {"sim_targets", encode(p.sim_targets)},
                       {"rho", encode(p.rho)},
                       {"rho_min", encode(p.rho_min)},
                       {"dist", encode(p.dist)},
                       {"status", status_name(p.status)},
                       {"origin_iteration", p.origin_iteration},
                       {"origin_center", p.origin_center},
                       {"weight", encode(p.weight)},
                       {"groups_evaluated", p.groups_evaluated},
                       {"failure", p.failure}});
    j["points"] = std::move(pts);
    return j.dump();
}

engine_state checkpoint_from_string(const std::string& text)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw config_error(std::string("checkpoint: ") + e.what());
    }
    try {
        if (j.value("format", "") != "imabc-checkpoint" || j.value("version", 0) != format_version)
            throw config_error("checkpoint: unrecognized format or version");
        engine_state s;
        s.config = decode_config(j.at("config"));
        s.iteration = j.at("iteration").get<std::size_t>();
        s.n_total = j.at("n_total").get<std::size_t>();
        s.converged = j.at("converged").get<bool>();
        s.ess = decode(j.at("ess"));
        s.tolerance.alphas = decode_vec(j.at("alphas"));
        s.group_evaluations = j.at("group_evaluations").get<std::vector<std::uint64_t>>();
        for (const auto& a : j.at("tolerance_history")) s.tolerance_history.push_back(decode_vec(a));
        for (const auto& r : j.at("history")) {
            iteration_record rec;
            rec.iteration = r.at("iteration").get<std::size_t>();
            rec.n_total = r.at("n_total").get<std::size_t>();
            rec.n_drawn = r.at("n_drawn").get<std::size_t>();
            rec.n_drawn_accepted = r.at("n_drawn_accepted").get<std::size_t>();
            rec.n_centers_demoted = r.at("n_centers_demoted").get<std::size_t>();
            rec.n_pruned = r.at("n_pruned").get<std::size_t>();
            rec.n_accepted = r.at("n_accepted").get<std::size_t>();
            rec.acceptance_rate = decode(r.at("acceptance_rate"));
            rec.ess = decode(r.at("ess"));
            s.history.push_back(rec);
        }
        for (const auto& k : j.at("kernels")) {
            const auto mean = decode_vec(k.at("mean"));
            s.kernels.emplace_back(Eigen::Map<const Eigen::VectorXd>(mean.data(), static_cast<Eigen::Index>(mean.size())),
                                   decode_matrix(k.at("covariance")));
        }
        for (const auto& pj : j.at("points")) {
            point p;
            p.index = pj.at("index").get<std::uint64_t>();
            p.theta = decode_vec(pj.at("theta"));
            p.sim_targets = decode_vec(pj.at("sim_targets"));
            p.rho = decode_vec(pj.at("rho"));
            p.rho_min = decode(pj.at("rho_min"));
            p.dist = decode(pj.at("dist"));
            p.status = parse_status(pj.at("status").get<std::string>());
            p.origin_iteration = pj.at("origin_iteration").get<std::size_t>();
            p.origin_center = pj.at("origin_center").get<int>();
            p.weight = decode(pj.at("weight"));
            p.groups_evaluated = pj.at("groups_evaluated").get<std::size_t>();
            p.failure = pj.at("failure").get<std::string>();
            s.points.push_back(std::move(p));
        }
        return s;
    } catch (const json::exception& e) {
        throw config_error(std::string("checkpoint: ") + e.what());
    }
}

void save_checkpoint(const engine_state& state, const std::filesystem::path& path)
{
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw config_error("cannot write checkpoint '" + tmp.string() + "'");
        out << checkpoint_to_string(state);
        if (!out) throw config_error("failed writing checkpoint '" + tmp.string() + "'");
    }
    std::filesystem::rename(tmp, path);
}

engine_state load_checkpoint(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw config_error("cannot read checkpoint '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return checkpoint_from_string(ss.str());
}

void check_resume_compatible(const engine_state& state, const engine_config& config, std::size_t n_params,
                             std::size_t n_targets)
{
    const auto& c = state.config;
    const auto mismatch = [](const std::string& what) {
        throw config_error("checkpoint is incompatible with the run config: " + what + " differs");
    };
    if (c.seed != config.seed) mismatch("seed");
    if (c.n_init != config.n_init) mismatch("n_init");
    if (c.n_centers != config.n_centers) mismatch("n_centers");
    if (c.batch_per_center != config.batch_per_center) mismatch("batch_per_center");
    if (c.n_post != config.n_post) mismatch("n_post");
    if (state.dim() != n_params) mismatch("parameter count");
    if (state.tolerance.alphas.size() != n_targets) mismatch("target count");
}

} // namespace imabc
