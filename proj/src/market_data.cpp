// SPDX-License-Identifier: Apache-2.0
#include "credkit/market_data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "credkit/errors.hpp"

namespace credkit {

namespace {

double hazard(double p) { return -std::log1p(-p); }

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream is(line);
    while (std::getline(is, field, ',')) {
        // trim
        auto b = field.find_first_not_of(" \t");
        auto e = field.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? std::string() : field.substr(b, e - b + 1));
    }
    return out;
}

double parse_double(const std::string& s, int line_no, const char* what) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        CK_REQUIRE(pos == s.size(), "line ", line_no, ": trailing characters in ", what, " '", s, "'");
        return v;
    } catch (const InputError&) {
        throw;
    } catch (const std::exception&) {
        throw InputError("line " + std::to_string(line_no) + ": cannot parse " + what + " '" + s + "'");
    }
}

} // namespace

double CreditCurve::default_prob_at(double t) const {
    if (t <= 0.0) return 0.0;
    // piecewise-linear in cumulative hazard, anchored at H(0) = 0
    double t_prev = 0.0, h_prev = 0.0;
    for (std::size_t i = 0; i < horizons.size(); ++i) {
        double h_i = hazard(default_prob[static_cast<Eigen::Index>(i)]);
        if (t <= horizons[i]) {
            double w = (t - t_prev) / (horizons[i] - t_prev);
            return -std::expm1(-(h_prev + w * (h_i - h_prev)));
        }
        t_prev = horizons[i];
        h_prev = h_i;
    }
    // flat hazard-rate extrapolation beyond the last quote
    double rate;
    if (horizons.size() >= 2) {
        double h0 = hazard(default_prob[static_cast<Eigen::Index>(horizons.size()) - 2]);
        rate = (h_prev - h0) / (horizons.back() - horizons[horizons.size() - 2]);
    } else {
        rate = h_prev / horizons.back();
    }
    return -std::expm1(-(h_prev + rate * (t - horizons.back())));
}

double CreditCurve::gamma_at(double t) const {
    if (gamma_horizons.empty()) return gamma[0];
    if (t <= gamma_horizons.front()) return gamma[0];
    if (t >= gamma_horizons.back()) return gamma[gamma.size() - 1];
    auto it = std::upper_bound(gamma_horizons.begin(), gamma_horizons.end(), t);
    auto i = static_cast<Eigen::Index>(it - gamma_horizons.begin());
    double w = (t - gamma_horizons[i - 1]) / (gamma_horizons[i] - gamma_horizons[i - 1]);
    return gamma[i - 1] + w * (gamma[i] - gamma[i - 1]);
}

void CreditCurve::validate() const {
    CK_REQUIRE(!name.empty(), "curve has empty name");
    CK_REQUIRE(!horizons.empty(), "curve ", name, ": no quoted horizons");
    CK_REQUIRE(static_cast<std::size_t>(default_prob.size()) == horizons.size(),
               "curve ", name, ": horizon/probability size mismatch");
    CK_REQUIRE(weight > 0.0, "curve ", name, ": weight must be > 0");
    CK_REQUIRE(curve_recovery >= 0.0 && curve_recovery < 1.0,
               "curve ", name, ": recovery must be in [0,1)");
    double prev_t = 0.0, prev_p = 0.0;
    for (std::size_t i = 0; i < horizons.size(); ++i) {
        CK_REQUIRE(horizons[i] > prev_t, "curve ", name, ": horizons not ascending");
        double p = default_prob[static_cast<Eigen::Index>(i)];
        CK_REQUIRE(p >= 0.0 && p < 1.0, "curve ", name, ": default_prob out of [0,1)");
        CK_REQUIRE(p >= prev_p, "curve ", name, ": default_prob not monotone");
        prev_t = horizons[i];
        prev_p = p;
    }
    if (gamma_horizons.empty()) {
        CK_REQUIRE(gamma.size() == 1, "curve ", name, ": constant gamma must have one value");
    } else {
        CK_REQUIRE(static_cast<std::size_t>(gamma.size()) == gamma_horizons.size(),
                   "curve ", name, ": gamma term structure size mismatch");
    }
    for (Eigen::Index i = 0; i < gamma.size(); ++i) {
        CK_REQUIRE(gamma[i] >= 0.0 && gamma[i] <= 1.0, "curve ", name, ": gamma out of [0,1]");
        if (i > 0)
            CK_REQUIRE(gamma[i] >= gamma[i - 1], "curve ", name, ": gamma term structure must be non-decreasing");
    }
}

Eigen::VectorXd Portfolio::weights() const {
    Eigen::VectorXd w(static_cast<Eigen::Index>(names.size()));
    for (std::size_t i = 0; i < names.size(); ++i) w[static_cast<Eigen::Index>(i)] = names[i].weight;
    return w;
}

double Portfolio::expected_loss(double t) const {
    double el = 0.0;
    for (const auto& c : names) el += c.weight * c.default_prob_at(t) * (1.0 - c.curve_recovery);
    return el;
}

void Portfolio::validate() const {
    CK_REQUIRE(!names.empty(), "portfolio is empty");
    std::set<std::string> seen;
    double wsum = 0.0;
    for (const auto& c : names) {
        c.validate();
        CK_REQUIRE(seen.insert(c.name).second, "duplicate name '", c.name, "'");
        wsum += c.weight;
    }
    CK_REQUIRE(std::abs(wsum - 1.0) <= 1e-12, "portfolio weights must sum to 1, got ", wsum);
}

void EtlTargets::validate() const {
    CK_REQUIRE(!horizons.empty(), "targets: no horizons");
    CK_REQUIRE(!tranches.empty(), "targets: no tranches");
    CK_REQUIRE(etl.rows() == static_cast<Eigen::Index>(tranches.size()) &&
                   etl.cols() == static_cast<Eigen::Index>(horizons.size()),
               "targets: etl matrix shape mismatch");
    for (std::size_t h = 1; h < horizons.size(); ++h)
        CK_REQUIRE(horizons[h] > horizons[h - 1], "targets: horizons not ascending");
    for (std::size_t k = 0; k < tranches.size(); ++k) {
        const auto& tr = tranches[k];
        CK_REQUIRE(tr.attach >= 0.0 && tr.attach < tr.detach && tr.detach <= 1.0,
                   "targets: tranche ", k, " must satisfy 0 <= attach < detach <= 1");
        for (Eigen::Index h = 0; h < etl.cols(); ++h) {
            double v = etl(static_cast<Eigen::Index>(k), h);
            CK_REQUIRE(v >= 0.0 && v <= 1.0, "targets: ETL out of [0,1] at tranche ", k, " horizon ", h);
            if (h > 0)
                CK_REQUIRE(v >= etl(static_cast<Eigen::Index>(k), h - 1) - 1e-12,
                           "targets: ETL must be non-decreasing in horizon (tranche ", k, ")");
        }
    }
}

int EtlTargets::portfolio_row() const {
    for (std::size_t k = 0; k < tranches.size(); ++k)
        if (tranches[k].attach == 0.0 && tranches[k].detach == 1.0) return static_cast<int>(k);
    return -1;
}

Portfolio load_portfolio(const std::string& path) {
    std::ifstream in(path);
    CK_REQUIRE(in.good(), "cannot open portfolio file '", path, "'");
    Portfolio p;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        auto fields = split_fields(line);
        if (fields.empty()) continue;
        CK_REQUIRE(fields.size() >= 5, "line ", line_no, ": expected at least name, one t:p pair, recovery, weight, gamma");
        CreditCurve c;
        c.name = fields[0];
        std::size_t n_pairs = fields.size() - 4;
        c.horizons.resize(n_pairs);
        c.default_prob.resize(static_cast<Eigen::Index>(n_pairs));
        for (std::size_t i = 0; i < n_pairs; ++i) {
            const std::string& f = fields[1 + i];
            auto colon = f.find(':');
            CK_REQUIRE(colon != std::string::npos, "line ", line_no, ": field ", i + 2,
                       " must be t:p, got '", f, "'");
            c.horizons[i] = parse_double(f.substr(0, colon), line_no, "horizon");
            c.default_prob[static_cast<Eigen::Index>(i)] =
                parse_double(f.substr(colon + 1), line_no, "default_prob");
        }
        c.curve_recovery = parse_double(fields[fields.size() - 3], line_no, "recovery");
        c.weight = parse_double(fields[fields.size() - 2], line_no, "weight");
        c.gamma = Eigen::VectorXd::Constant(1, parse_double(fields[fields.size() - 1], line_no, "gamma"));
        try {
            c.validate();
        } catch (const InputError& e) {
            throw InputError("line " + std::to_string(line_no) + ": " + e.what());
        }
        p.names.push_back(std::move(c));
    }
    CK_REQUIRE(!p.names.empty(), "portfolio file '", path, "' has no curves");
    double wsum = 0.0;
    for (const auto& c : p.names) wsum += c.weight;
    CK_REQUIRE(std::abs(wsum - 1.0) <= 1e-6, "portfolio weights sum to ", wsum,
               ", more than 1e-6 away from 1");
    for (auto& c : p.names) c.weight /= wsum;
    p.validate();
    return p;
}

void save_portfolio(const Portfolio& p, const std::string& path) {
    std::ofstream out(path);
    CK_REQUIRE(out.good(), "cannot open '", path, "' for writing");
    out << "# name, t1:p1, ..., recovery, weight, gamma\n";
    out << std::setprecision(17);
    for (const auto& c : p.names) {
        out << c.name;
        for (std::size_t i = 0; i < c.horizons.size(); ++i)
            out << ", " << c.horizons[i] << ":" << c.default_prob[static_cast<Eigen::Index>(i)];
        out << ", " << c.curve_recovery << ", " << c.weight << ", " << c.gamma[0] << "\n";
    }
}

EtlTargets load_targets(const std::string& path) {
    std::ifstream in(path);
    CK_REQUIRE(in.good(), "cannot open targets file '", path, "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw InputError("targets file '" + path + "': " + e.what());
    }
    EtlTargets t;
    try {
        t.horizons = j.at("horizons").get<std::vector<double>>();
        for (const auto& jt : j.at("tranches")) {
            TrancheDef tr;
            tr.attach = jt.at("attach").get<double>();
            tr.detach = jt.at("detach").get<double>();
            t.tranches.push_back(tr);
        }
        auto rows = j.at("etl").get<std::vector<std::vector<double>>>();
        CK_REQUIRE(rows.size() == t.tranches.size(), "targets: etl rows != tranches");
        t.etl.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(t.horizons.size()));
        for (std::size_t r = 0; r < rows.size(); ++r) {
            CK_REQUIRE(rows[r].size() == t.horizons.size(), "targets: etl row ", r, " length != horizons");
            for (std::size_t h = 0; h < rows[r].size(); ++h)
                t.etl(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(h)) = rows[r][h];
        }
    } catch (const nlohmann::json::exception& e) {
        throw InputError("targets file '" + path + "': " + e.what());
    }
    t.validate();
    return t;
}

void save_targets(const EtlTargets& t, const std::string& path) {
    nlohmann::json j;
    j["horizons"] = t.horizons;
    j["tranches"] = nlohmann::json::array();
    for (const auto& tr : t.tranches)
        j["tranches"].push_back({{"attach", tr.attach}, {"detach", tr.detach}});
    j["etl"] = nlohmann::json::array();
    for (Eigen::Index r = 0; r < t.etl.rows(); ++r) {
        std::vector<double> row(t.etl.cols());
        for (Eigen::Index h = 0; h < t.etl.cols(); ++h) row[static_cast<std::size_t>(h)] = t.etl(r, h);
        j["etl"].push_back(row);
    }
    std::ofstream out(path);
    CK_REQUIRE(out.good(), "cannot open '", path, "' for writing");
    out << j.dump(2) << "\n";
}

void check_portfolio_row(const Portfolio& p, const EtlTargets& t, double tol) {
    int row = t.portfolio_row();
    if (row < 0) return;
    for (std::size_t h = 0; h < t.horizons.size(); ++h) {
        double implied = p.expected_loss(t.horizons[h]);
        double quoted = t.etl(row, static_cast<Eigen::Index>(h));
        CK_REQUIRE(std::abs(implied - quoted) <= tol, "targets 0-100% row at ", t.horizons[h],
                   "y (", quoted, ") differs from curve-implied expected loss (", implied,
                   ") by more than ", tol);
    }
}

Portfolio adjust_curves_preserve_el(const Portfolio& p, const Eigen::MatrixXd& model_recovery) {
    Portfolio out = p;
    CK_REQUIRE(model_recovery.rows() == static_cast<Eigen::Index>(p.size()),
               "adjust_curves_preserve_el: recovery rows != names");
    for (std::size_t i = 0; i < p.size(); ++i) {
        auto& c = out.names[i];
        CK_REQUIRE(model_recovery.cols() == static_cast<Eigen::Index>(c.horizons.size()),
                   "adjust_curves_preserve_el: recovery cols != horizons for ", c.name);
        double prev = 0.0;
        for (std::size_t h = 0; h < c.horizons.size(); ++h) {
            double r_model = model_recovery(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(h));
            CK_REQUIRE(r_model >= 0.0 && r_model < 1.0,
                       "adjust_curves_preserve_el: model recovery out of [0,1) for ", c.name);
            double target_el = c.default_prob[static_cast<Eigen::Index>(h)] * (1.0 - c.curve_recovery);
            double p_adj = target_el / (1.0 - r_model);
            CK_REQUIRE(p_adj < 1.0, "curve ", c.name, " at ", c.horizons[h],
                       "y: expected loss not attainable (requires p >= 1)");
            p_adj = std::max(p_adj, prev);
            c.default_prob[static_cast<Eigen::Index>(h)] = p_adj;
            prev = p_adj;
        }
    }
    return out;
}

DiscountCurve::DiscountCurve(std::vector<double> times, std::vector<double> dfs)
    : times_(std::move(times)) {
    CK_REQUIRE(times_.size() == dfs.size() && !times_.empty(), "DiscountCurve: bad knot data");
    log_dfs_.resize(dfs.size());
    double prev_t = 0.0;
    for (std::size_t i = 0; i < times_.size(); ++i) {
        CK_REQUIRE(times_[i] > prev_t, "DiscountCurve: times must be ascending and positive");
        CK_REQUIRE(dfs[i] > 0.0, "DiscountCurve: discount factors must be positive");
        log_dfs_[i] = std::log(dfs[i]);
        prev_t = times_[i];
    }
}

DiscountCurve DiscountCurve::flat(double rate, double t_max) {
    return DiscountCurve({t_max}, {std::exp(-rate * t_max)});
}

double DiscountCurve::df(double t) const {
    CK_REQUIRE(!times_.empty(), "DiscountCurve: empty curve");
    if (t <= 0.0) return 1.0;
    CK_REQUIRE(t <= times_.back() + 1e-12, "DiscountCurve: missing discount factor at t=", t);
    double t_prev = 0.0, l_prev = 0.0;
    for (std::size_t i = 0; i < times_.size(); ++i) {
        if (t <= times_[i]) {
            double w = (t - t_prev) / (times_[i] - t_prev);
            return std::exp(l_prev + w * (log_dfs_[i] - l_prev));
        }
        t_prev = times_[i];
        l_prev = log_dfs_[i];
    }
    return std::exp(log_dfs_.back());
}

} // namespace credkit
