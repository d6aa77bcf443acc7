#include "imabc/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "imabc/errors.hpp"
#include "imabc/tables.hpp"

namespace imabc {

namespace {

using json = nlohmann::json;

std::string field(const csv_table& t, const std::vector<std::string>& row, const std::string& name)
{
    return t.has_column(name) ? row[t.column(name)] : std::string{};
}

double number_or(const std::string& s, double fallback) { return s.empty() ? fallback : parse_double(s); }

bool parse_bool(const std::string& s)
{
    if (s.empty() || s == "false" || s == "0" || s == "FALSE") return false;
    if (s == "true" || s == "1" || s == "TRUE") return true;
    throw config_error("not a boolean: '" + s + "'");
}

json read_json(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw config_error("cannot open '" + path.string() + "'");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw config_error(path.string() + ": " + e.what());
    }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p)
{
    if (p.empty()) return {};
    std::filesystem::path path(p);
    return path.is_absolute() ? path : (base / path).lexically_normal();
}

void require_file(const std::filesystem::path& p, const std::string& what)
{
    if (!std::filesystem::is_regular_file(p))
        throw config_error(what + " file not found: '" + p.string() + "'");
}

std::string kind_name(prior_kind k) { return k == prior_kind::uniform ? "uniform" : "truncated_normal"; }

} // namespace

prior_set load_priors(const std::filesystem::path& path)
{
    const auto t = read_csv(path);
    std::vector<prior_spec> specs;
    try {
        for (const auto& row : t.rows) {
            prior_spec s;
            s.name = field(t, row, "name");
            const auto kind = field(t, row, "kind");
            if (kind == "uniform" || kind == "U")
                s.kind = prior_kind::uniform;
            else if (kind == "truncated_normal" || kind == "TN")
                s.kind = prior_kind::truncated_normal;
            else
                throw config_error("unknown prior kind '" + kind + "'");
            s.mu = number_or(field(t, row, "mu"), 0.0);
            s.sigma = number_or(field(t, row, "sigma"), 1.0);
            s.lower = parse_double(field(t, row, "lower"));
            s.upper = parse_double(field(t, row, "upper"));
            s.bound_rule = field(t, row, "bound_rule");
            s.bound_ref = field(t, row, "bound_ref");
            specs.push_back(std::move(s));
        }
        return prior_set(std::move(specs));
    } catch (const config_error&) {
        throw;
    } catch (const error& e) {
        throw config_error(path.string() + ": " + e.what());
    }
}

void save_priors(const prior_set& priors, const std::filesystem::path& path)
{
    csv_table t{{"name", "kind", "mu", "sigma", "lower", "upper", "bound_rule", "bound_ref"}, {}};
    for (const auto& s : priors.specs())
        t.rows.push_back({s.name, kind_name(s.kind), format_double(s.mu), format_double(s.sigma),
                          format_double(s.lower), format_double(s.upper), s.bound_rule, s.bound_ref});
    write_csv(t, path);
}

target_set load_targets(const std::filesystem::path& path)
{
    const auto t = read_csv(path);
    std::vector<target_spec> specs;
    try {
        for (const auto& row : t.rows) {
            target_spec s;
            s.id = field(t, row, "id");
            s.observed = parse_double(field(t, row, "observed"));
            const auto form = field(t, row, "interval_form");
            if (form.empty() || form == "normal_se")
                s.form = interval_form::normal_se;
            else if (form == "explicit_bounds")
                s.form = interval_form::explicit_bounds;
            else
                throw config_error("unknown interval form '" + form + "'");
            s.se = number_or(field(t, row, "se"), 1.0);
            s.final_lower = number_or(field(t, row, "final_lower"), 0.0);
            s.final_upper = number_or(field(t, row, "final_upper"), 0.0);
            s.upper_extension = number_or(field(t, row, "upper_extension"), 0.0);
            s.alpha_init = number_or(field(t, row, "alpha_init"), 0.0);
            s.alpha_final = parse_double(field(t, row, "alpha_final"));
            s.sim_sample_size = static_cast<std::size_t>(number_or(field(t, row, "sim_sample_size"), 1.0));
            s.cost_rank = static_cast<int>(number_or(field(t, row, "cost_rank"), 0.0));
            s.nonnegative = parse_bool(field(t, row, "nonnegative"));
            specs.push_back(std::move(s));
        }
        return target_set(std::move(specs));
    } catch (const config_error& e) {
        throw config_error(path.string() + ": " + e.what());
    } catch (const error& e) {
        throw config_error(path.string() + ": " + e.what());
    }
}

void save_targets(const target_set& targets, const std::filesystem::path& path)
{
    csv_table t{{"id", "observed", "interval_form", "se", "final_lower", "final_upper", "upper_extension",
                 "alpha_init", "alpha_final", "sim_sample_size", "cost_rank", "nonnegative"},
                {}};
    for (const auto& s : targets.specs()) {
        const bool expl = s.form == interval_form::explicit_bounds;
        t.rows.push_back({s.id, format_double(s.observed), expl ? "explicit_bounds" : "normal_se",
                          format_double(s.se), expl ? format_double(s.final_lower) : "",
                          expl ? format_double(s.final_upper) : "", format_double(s.upper_extension),
                          format_double(s.alpha_init), format_double(s.alpha_final),
                          std::to_string(s.sim_sample_size), std::to_string(s.cost_rank),
                          s.nonnegative ? "true" : "false"});
    }
    write_csv(t, path);
}

std::vector<crc::study_spec> load_populations(const std::filesystem::path& path)
{
    const auto j = read_json(path);
    std::vector<crc::study_spec> studies;
    try {
        for (const auto& sj : j.at("studies")) {
            crc::study_spec s;
            s.name = sj.at("name").get<std::string>();
            s.statistic = crc::parse_statistic(sj.at("statistic").get<std::string>());
            s.calendar_year = sj.at("calendar_year").get<int>();
            s.screening_naive = sj.value("screening_naive", true);
            s.detection = crc::parse_detection(sj.value("detection", std::string("colonoscopy")));
            const auto& pop = sj.at("population");
            if (pop.contains("cells")) {
                for (const auto& c : pop.at("cells"))
                    s.cells.push_back({crc::parse_sex(c.at("sex").get<std::string>()), c.at("age_lower").get<double>(),
                                       c.at("age_upper").get<double>(), c.value("weight", 1.0)});
            } else if (pop.contains("age_normal")) {
                const auto& a = pop.at("age_normal");
                s.age_normal = crc::age_normal_population{a.at("mean").get<double>(), a.at("sd").get<double>(),
                                                          a.at("lower").get<double>(), a.at("upper").get<double>(),
                                                          a.at("male_fraction").get<double>()};
            }
            for (const auto& tj : sj.at("targets")) {
                crc::study_target t;
                t.id = tj.at("id").get<std::string>();
                if (tj.contains("sex")) t.person_sex = crc::parse_sex(tj.at("sex").get<std::string>());
                t.age_lower = tj.value("age_lower", t.age_lower);
                t.age_upper = tj.value("age_upper", t.age_upper);
                if (tj.contains("site")) {
                    const auto site = tj.at("site").get<std::string>();
                    if (site != "colon" && site != "rectum") throw config_error("site must be colon or rectum");
                    t.rectal = site == "rectum";
                }
                t.size_lower = tj.value("size_lower", t.size_lower);
                t.size_upper = tj.value("size_upper", t.size_upper);
                s.targets.push_back(std::move(t));
            }
            s.validate();
            studies.push_back(std::move(s));
        }
    } catch (const json::exception& e) {
        throw config_error(path.string() + ": " + e.what());
    } catch (const config_error& e) {
        throw config_error(path.string() + ": " + e.what());
    }
    return studies;
}

crc::life_table load_life_table(const std::filesystem::path& path)
{
    const auto t = read_csv(path);
    std::vector<crc::life_table::row> rows;
    try {
        for (const auto& row : t.rows) {
            crc::life_table::row r;
            r.s = crc::parse_sex(field(t, row, "sex"));
            const auto cohort = field(t, row, "birth_cohort");
            if (!cohort.empty() && cohort != "all") r.birth_cohort = std::stoi(cohort);
            r.age = std::stoi(field(t, row, "age"));
            r.qx = parse_double(field(t, row, "qx"));
            rows.push_back(r);
        }
        return crc::life_table(std::move(rows));
    } catch (const std::logic_error& e) {
        throw config_error(path.string() + ": " + e.what());
    } catch (const config_error& e) {
        throw config_error(path.string() + ": " + e.what());
    }
}

model_kind parse_model_kind(const std::string& s)
{
    if (s == "crc_spin") return model_kind::crc_spin;
    if (s == "conjugate_normal") return model_kind::conjugate_normal;
    if (s == "symmetric_bimodal") return model_kind::symmetric_bimodal;
    throw config_error("unknown model '" + s + "'");
}

std::string to_string(model_kind k)
{
    switch (k) {
    case model_kind::crc_spin: return "crc_spin";
    case model_kind::conjugate_normal: return "conjugate_normal";
    case model_kind::symmetric_bimodal: return "symmetric_bimodal";
    }
    return "?";
}

run_config load_run_config(const std::filesystem::path& path)
{
    require_file(path, "run config");
    const auto j = read_json(path);
    const auto base = std::filesystem::absolute(path).parent_path();
    run_config c;
    c.source = std::filesystem::absolute(path);
    try {
        c.model = parse_model_kind(j.at("model").get<std::string>());
        c.priors = resolve(base, j.at("priors").get<std::string>());
        c.targets = resolve(base, j.at("targets").get<std::string>());
        require_file(c.priors, "prior");
        require_file(c.targets, "target");
        if (c.model == model_kind::crc_spin) {
            c.populations = resolve(base, j.at("populations").get<std::string>());
            require_file(c.populations, "population");
            c.life_table = resolve(base, j.value("life_table", std::string{}));
            if (!c.life_table.empty()) require_file(c.life_table, "life table");
        }
        if (!j.contains("seed")) throw config_error("run config must set 'seed'");
        c.engine.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("engine")) {
            const auto& e = j.at("engine");
            c.engine.n_init = e.value("n_init", c.engine.n_init);
            c.engine.n_centers = e.value("n_centers", c.engine.n_centers);
            c.engine.batch_per_center = e.value("batch_per_center", c.engine.batch_per_center);
            c.engine.n_post = e.value("n_post", c.engine.n_post);
            c.engine.max_iterations = e.value("max_iterations", c.engine.max_iterations);
        }
        c.engine.workers = j.value("workers", c.engine.workers);
        c.output_dir = resolve(base, j.value("output_dir", std::string("output")));
        if (j.contains("model_options")) {
            const auto& m = j.at("model_options");
            c.noise_sd = m.value("noise_sd", c.noise_sd);
            c.block_size = m.value("block_size", c.block_size);
            c.model_workers = m.value("model_workers", c.model_workers);
        }
        c.engine.validate();
    } catch (const json::exception& e) {
        throw config_error(path.string() + ": " + e.what());
    } catch (const config_error&) {
        throw;
    } catch (const error& e) {
        throw config_error(path.string() + ": " + e.what());
    }
    return c;
}

std::string run_config_to_json(const run_config& c)
{
    json j;
    j["model"] = to_string(c.model);
    j["priors"] = c.priors.string();
    j["targets"] = c.targets.string();
    if (c.model == model_kind::crc_spin) {
        j["populations"] = c.populations.string();
        j["life_table"] = c.life_table.string();
    }
    j["seed"] = c.engine.seed;
    j["engine"] = {{"n_init", c.engine.n_init},
                   {"n_centers", c.engine.n_centers},
                   {"batch_per_center", c.engine.batch_per_center},
                   {"n_post", c.engine.n_post},
                   {"max_iterations", c.engine.max_iterations}};
    j["model_options"] = {{"noise_sd", c.noise_sd}, {"block_size", c.block_size}, {"model_workers", c.model_workers}};
    return j.dump(2) + "\n";
}

} // namespace imabc
