#pragma once

#include <stdexcept>
#include <string>

#include <json.hpp>

#include "kelly/ct_models.hpp"
#include "kelly/dependent.hpp"
#include "kelly/empirics.hpp"
#include "kelly/metrics.hpp"
#include "kelly/optimize.hpp"
#include "kelly/return_models.hpp"

namespace kelly {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

// {"kind":"bernoulli","p":0.75} | {"kind":"squared_cauchy"} | {"kind":"squared_t3"}
inline ReturnModel return_model_from_json(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "bernoulli") return ReturnModel::bernoulli(j.at("p").get<double>());
    if (kind == "squared_cauchy") return ReturnModel::squared_cauchy();
    if (kind == "squared_t3") return ReturnModel::squared_student_t3();
    throw std::invalid_argument("unknown return model kind: " + kind);
}

inline json return_model_to_json(const ReturnModel& m) {
    switch (m.kind()) {
        case ReturnKind::bernoulli: return {{"kind", "bernoulli"}, {"p", m.bernoulli_p()}};
        case ReturnKind::squared_cauchy: return {{"kind", "squared_cauchy"}};
        case ReturnKind::squared_t3: return {{"kind", "squared_t3"}};
        default:
            throw std::invalid_argument("generic models have no JSON descriptor");
    }
}

// shorthand "bernoulli:0.75", "squared_cauchy", "squared_t3", or the inline
// JSON document {"kind":"bernoulli","p":0.75}
inline ReturnModel parse_return_model(const std::string& spec) {
    if (!spec.empty() && spec.front() == '{') return return_model_from_json(json::parse(spec));
    const auto colon = spec.find(':');
    const std::string name = spec.substr(0, colon);
    if (name == "bernoulli") {
        if (colon == std::string::npos)
            throw std::invalid_argument("bernoulli model needs a probability, e.g. bernoulli:0.75");
        return ReturnModel::bernoulli(std::stod(spec.substr(colon + 1)));
    }
    if (name == "squared_cauchy") return ReturnModel::squared_cauchy();
    if (name == "squared_t3") return ReturnModel::squared_student_t3();
    throw std::invalid_argument("unknown model: " + spec);
}

// {"kind":"gbm","mu":..,"sigma":..} and friends
inline CtModel ct_model_from_json(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    auto d = [&](const char* k) { return j.at(k).get<double>(); };
    auto opt = [&](const char* k, double dflt) { return j.value(k, dflt); };
    CtModel model;
    if (kind == "gbm") model = Gbm{d("mu"), d("sigma")};
    else if (kind == "vasicek")
        model = VasicekRate{d("a"), d("b"), d("mu"), d("sigma"), opt("rho", 0.0)};
    else if (kind == "cir")
        model = CirRate{d("a"), d("b"), d("mu"), d("sigma"), opt("rho", 0.0)};
    else if (kind == "heston")
        model = HestonVol{d("mu"), d("kappa"), d("sigma2"), d("beta"), opt("rho", 0.0)};
    else if (kind == "logistic_rate")
        model = LogisticRate{d("a"), d("b"), d("mu"), d("sigma"), d("r0")};
    else if (kind == "logistic_price")
        model = LogisticPrice{d("mu"), d("M"), d("sigma")};
    else
        throw std::invalid_argument("unknown continuous-time model kind: " + kind);
    validate(model);
    return model;
}

inline json ct_model_to_json(const CtModel& model) {
    return std::visit(
        [](const auto& m) -> json {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, Gbm>)
                return {{"kind", "gbm"}, {"mu", m.mu}, {"sigma", m.sigma}};
            else if constexpr (std::is_same_v<T, VasicekRate>)
                return {{"kind", "vasicek"}, {"a", m.a},         {"b", m.b},
                        {"mu", m.mu},        {"sigma", m.sigma}, {"rho", m.rho_bar}};
            else if constexpr (std::is_same_v<T, CirRate>)
                return {{"kind", "cir"},  {"a", m.a},         {"b", m.b},
                        {"mu", m.mu},     {"sigma", m.sigma}, {"rho", m.rho_bar}};
            else if constexpr (std::is_same_v<T, HestonVol>)
                return {{"kind", "heston"},   {"mu", m.mu},     {"kappa", m.kappa},
                        {"sigma2", m.sigma2}, {"beta", m.beta}, {"rho", m.rho_bar}};
            else if constexpr (std::is_same_v<T, LogisticRate>)
                return {{"kind", "logistic_rate"}, {"a", m.a},         {"b", m.b},
                        {"mu", m.mu},              {"sigma", m.sigma}, {"r0", m.r0}};
            else
                return {{"kind", "logistic_price"}, {"mu", m.mu}, {"M", m.M}, {"sigma", m.sigma}};
        },
        model);
}

inline json strategy_report_to_json(const StrategyReport& r) {
    json j{{"schema", kSchemaVersion},
           {"criterion", to_string(r.criterion)},
           {"f", r.f_star},
           {"objective", r.objective_value},
           {"boundary", r.boundary}};
    if (r.criterion == Criterion::ridge) j["gamma"] = r.gamma;
    if (r.criterion == Criterion::variance_capped) {
        j["v0"] = r.v_cap;
        j["constraint_active"] = r.constraint_active;
        if (r.multiplier) j["multiplier"] = *r.multiplier;
    }
    return j;
}

inline json test_report_to_json(const TestReport& r) {
    json j{{"schema", kSchemaVersion}, {"suite", r.suite},     {"null", r.null_desc},
           {"statistic", r.statistic}, {"p_value", r.p_value}, {"level", r.level},
           {"pass", r.pass},           {"skipped", r.skipped}};
    if (!r.notes.empty()) j["notes"] = r.notes;
    if (!r.metrics.empty()) j["metrics"] = r.metrics;
    return j;
}

inline json ct_asymptotics_to_json(const CtAsymptotics& a, double gamma, double f_ri) {
    return json{{"schema", kSchemaVersion},
                {"g_coefficients", {{"linear", a.g_lin}, {"quadratic", a.g_quad}}},
                {"v_coefficients", {{"f2", a.v2}, {"f3", a.v3}, {"f4", a.v4}}},
                {"f_star", a.f_star},
                {"fluctuation_order",
                 a.order == FluctuationOrder::sqrt_t ? "sqrt_t" : "constant"},
                {"gamma", gamma},
                {"f_ri", f_ri}};
}

// Required-field checks for everything the CLI emits.
inline void validate_schema(const json& j, const std::string& kind) {
    auto need = [&](std::initializer_list<const char*> keys) {
        if (!j.contains("schema") || j.at("schema").get<int>() != kSchemaVersion)
            throw std::runtime_error(kind + ": bad or missing schema version");
        for (const char* k : keys)
            if (!j.contains(k)) throw std::runtime_error(kind + ": missing field " + k);
    };
    if (kind == "strategy_report") need({"criterion", "f", "objective", "boundary"});
    else if (kind == "test_report") need({"suite", "statistic", "p_value", "pass"});
    else if (kind == "ct_asymptotics") need({"g_coefficients", "v_coefficients", "f_star"});
    else if (kind == "summary") need({});
    else throw std::runtime_error("validate_schema: unknown kind " + kind);
}

} // namespace kelly
