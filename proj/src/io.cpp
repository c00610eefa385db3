#include "intermediation/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace intermed {

nlohmann::json instance_to_json(const Instance& inst) {
    return {{"sellers", inst.sellers()}, {"buyers", inst.buyers()}};
}

Instance instance_from_json(const nlohmann::json& doc) {
    if (!doc.is_object() || !doc.contains("sellers") || !doc.contains("buyers")) {
        throw Error(ErrorCode::BadParams, "instance JSON needs \"sellers\" and \"buyers\" arrays");
    }
    const auto values = [](const nlohmann::json& arr, const char* name) {
        if (!arr.is_array()) throw Error(ErrorCode::BadParams, std::string(name) + " must be an array");
        std::vector<double> out;
        out.reserve(arr.size());
        for (const auto& v : arr) {
            if (!v.is_number()) throw Error(ErrorCode::BadParams, std::string(name) + " must hold numbers");
            out.push_back(v.get<double>());
        }
        return out;
    };
    return validate_instance(values(doc.at("sellers"), "sellers"), values(doc.at("buyers"), "buyers"));
}

Instance read_instance_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::BadParams, "cannot open instance file " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::BadParams, "invalid JSON in " + path);
    }
    return instance_from_json(doc);
}

nlohmann::json trade_log_to_json(const TradeLog& log) {
    const auto price = [](double p) -> nlohmann::json {
        if (std::isfinite(p)) return p;
        return nullptr;
    };
    nlohmann::json bought = nlohmann::json::array();
    nlohmann::json sold = nlohmann::json::array();
    for (const Fill& f : log.bought) bought.push_back({f.step, f.agent.value, price(f.price)});
    for (const Fill& f : log.sold) sold.push_back({f.step, f.agent.value, price(f.price)});
    return {{"bought", bought}, {"sold", sold}, {"kappa", log.kappa}};
}

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string format_parameters(const std::vector<std::pair<std::string, double>>& params) {
    std::string out;
    for (const auto& [k, v] : params) {
        if (!out.empty()) out += ';';
        out += k + '=' + format_number(v);
    }
    return out;
}

std::string report_csv_row(const ConcentrationReport& r) {
    std::ostringstream os;
    os << r.claim << ',' << format_parameters(r.parameters) << ',' << format_number(r.empirical) << ','
       << format_number(r.bound) << ',' << r.trials << ',' << (r.pass ? "true" : "false") << ',' << r.note;
    return os.str();
}

nlohmann::json report_to_json(const ConcentrationReport& r) {
    nlohmann::json params = nlohmann::json::object();
    for (const auto& [k, v] : r.parameters) params[k] = v;
    return {{"claim", r.claim}, {"parameters", params}, {"empirical", r.empirical}, {"bound", r.bound},
            {"trials", r.trials}, {"pass", r.pass}, {"note", r.note}};
}

}  // namespace intermed
