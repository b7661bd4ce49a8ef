#pragma once

#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "symt/davie_gamelin.hpp"
#include "symt/extensions.hpp"
#include "symt/ideals.hpp"
#include "symt/norms.hpp"
#include "symt/tensor.hpp"

namespace symt {

using json = nlohmann::json;

// Wire formats use 1-based coordinate indices.

inline json tensor_to_json(const SymTensor& t) {
    json entries = json::array();
    for (const auto& [mi, v] : t.entries()) {
        json idx = json::array();
        for (int i : mi) idx.push_back(i + 1);
        entries.push_back({{"idx", idx}, {"val", v}});
    }
    return {{"n", t.order()}, {"d", t.dim()}, {"entries", entries}};
}

inline SymTensor tensor_from_json(const json& j) {
    SymTensor t(j.at("n").get<int>(), j.at("d").get<int>());
    for (const auto& e : j.at("entries")) {
        MultiIndex mi;
        for (const auto& i : e.at("idx")) mi.push_back(i.get<int>() - 1);
        t.set_entry(std::move(mi), e.at("val").get<double>());
    }
    return t;
}

inline json family_to_json(const CoefficientFamily& f) {
    json banded = json::array();
    for (const auto& [mi, v] : f.banded) {
        json idx = json::array();
        for (int i : mi) idx.push_back(i + 1);
        banded.push_back({{"idx", idx}, {"val", v}});
    }
    return {{"n", f.n},
            {"banded", banded},
            {"diag", {{"c", f.diag.c}, {"rho", f.diag.rho}, {"offset", f.diag.offset}}}};
}

inline CoefficientFamily family_from_json(const json& j) {
    CoefficientFamily f;
    f.n = j.at("n").get<int>();
    if (j.contains("banded"))
        for (const auto& e : j.at("banded")) {
            MultiIndex mi;
            for (const auto& i : e.at("idx")) mi.push_back(i.get<int>() - 1);
            f.banded[sorted_index(std::move(mi))] = e.at("val").get<double>();
        }
    if (j.contains("diag")) {
        const auto& d = j.at("diag");
        f.diag.c = d.value("c", 0.0);
        f.diag.rho = d.value("rho", 0.0);
        f.diag.offset = d.value("offset", 1);
    }
    f.validate();
    return f;
}

inline json tail_vector_to_json(const TailVector& z) {
    json head = json::array();
    for (Eigen::Index i = 0; i < z.head.size(); ++i) head.push_back(z.head(i));
    return {{"head", head}, {"tail", z.tail}};
}

inline TailVector tail_vector_from_json(const json& j) {
    const auto& h = j.at("head");
    Eigen::VectorXd head(h.size());
    for (std::size_t i = 0; i < h.size(); ++i) head(static_cast<Eigen::Index>(i)) = h[i].get<double>();
    return {std::move(head), j.value("tail", 0.0)};
}

inline json decomposition_to_json(const Decomposition& dec) {
    json terms = json::array();
    for (const auto& t : dec.terms) {
        json x = json::array();
        for (Eigen::Index i = 0; i < t.x.size(); ++i) x.push_back(t.x(i));
        terms.push_back({{"lambda", t.lambda}, {"x", x}});
    }
    return terms;
}

inline json budget_to_json(const OptBudget& b) {
    return {{"restarts", b.restarts},
            {"iterations", b.iterations},
            {"seed", b.seed},
            {"tolerance", b.tolerance}};
}

inline json norm_report_json(const std::string& norm, const std::string& bound_kind, Ball ball,
                             double value, const json& witness, const OptBudget& budget) {
    return {{"norm", norm},     {"kind", bound_kind},          {"ball", to_string(ball)},
            {"value", value},   {"witness", witness},          {"budget", budget_to_json(budget)},
            {"seed", budget.seed}};
}

inline json factorization_to_json(const Factorization& f) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < f.T.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < f.T.cols(); ++j) row.push_back(f.T(i, j));
        rows.push_back(row);
    }
    return {{"T", rows}, {"Q", tensor_to_json(f.Q)}};
}

inline json dg_report_json(const DGReport& r) {
    return {{"m", r.m},
            {"stages", r.stages},
            {"epsilon", r.epsilon},
            {"C", r.term_bound},
            {"sum_iterated", r.sum_iterated},
            {"sum_averaged", r.sum_averaged},
            {"sigma1", r.sigma1},
            {"sigma2", r.sigma2},
            {"sigma2_bound", r.sigma2_bound},
            {"max_term", r.max_term},
            {"pass", r.pass},
            {"violation", r.violation}};
}

/// Write-then-rename so failures never leave partial files behind.
inline void atomic_write_file(const std::filesystem::path& path, const std::string& content) {
    namespace fs = std::filesystem;
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + tmp.string());
        out << content;
        if (!out.good()) throw std::runtime_error("short write to " + tmp.string());
    }
    fs::rename(tmp, path);
}

inline json load_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return json::parse(in);
}

/// Flatten a report into "key,value" CSV lines (nested keys dotted).
inline void flatten_csv(const json& j, const std::string& prefix, std::string& out) {
    if (j.is_object()) {
        for (const auto& [k, v] : j.items())
            flatten_csv(v, prefix.empty() ? k : prefix + "." + k, out);
    } else if (j.is_array()) {
        for (std::size_t i = 0; i < j.size(); ++i)
            flatten_csv(j[i], prefix + "[" + std::to_string(i) + "]", out);
    } else {
        out += prefix;
        out += ",";
        out += j.dump();
        out += "\n";
    }
}

inline std::string report_to_string(const json& j, const std::string& format) {
    if (format == "json") return j.dump(2) + "\n";
    if (format == "csv") {
        std::string out;
        flatten_csv(j, "", out);
        return out;
    }
    throw std::invalid_argument("unknown format: " + format);
}

}  // namespace symt
