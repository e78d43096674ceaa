#include "fmlm/retention.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace fmlm {

void RetentionConfig::validate() const {
    if (context <= 0) throw std::invalid_argument("retention: context must be positive");
    if (buffer < 0 || buffer >= context)
        throw std::invalid_argument("retention: buffer must satisfy 0 <= E < n");
    if (!(alpha > 0.0)) throw std::invalid_argument("retention: alpha must be positive");
}

double retention_value(int distance, const RetentionConfig& cfg) {
    cfg.validate();
    if (distance < 0 || distance >= cfg.context)
        throw std::invalid_argument("retention: distance out of [0, n)");
    // Inside the buffer the branch must not touch the power, so the
    // value is 1 with no floating-point slack.
    if (distance < cfg.buffer) return 1.0;
    double num = static_cast<double>(distance - cfg.buffer + 1);
    double den = static_cast<double>(cfg.context - cfg.buffer);
    double exponent = 1.0 / (std::exp(1.0) * cfg.alpha);
    // At d = n - 1 the base is exactly 1, so the result is exactly 0.
    return 1.0 - std::pow(num / den, exponent);
}

BiasMatrix build_bias_matrix(const RetentionConfig& cfg, int seq_len) {
    cfg.validate();
    if (seq_len <= 0 || seq_len > cfg.context)
        throw std::invalid_argument("retention: seq_len must be in (0, n]");
    Mat values = Mat::Zero(seq_len, seq_len);
    // one evaluation per distance; rows share the same diagonal-constant values
    std::vector<double> by_distance(seq_len);
    for (int d = 0; d < seq_len; ++d) by_distance[d] = retention_value(d, cfg);
    for (int i = 0; i < seq_len; ++i)
        for (int j = 0; j <= i; ++j) values(i, j) = by_distance[i - j];
    return BiasMatrix{std::move(values), cfg};
}

std::optional<RetentionConfig> condition_to_retention(const Condition& cond,
                                                      int context) {
    if (context <= 0) throw std::invalid_argument("condition: context must be positive");
    if (std::holds_alternative<Perfect>(cond)) return std::nullopt;
    if (const auto* naive = std::get_if<Naive>(&cond))
        return RetentionConfig{1, naive->alpha, context};
    const auto& fleeting = std::get<Fleeting>(cond);
    return RetentionConfig{fleeting.buffer, fleeting.alpha, context};
}

std::string condition_name(const Condition& cond) {
    if (std::holds_alternative<Perfect>(cond)) return "perfect";
    if (std::holds_alternative<Naive>(cond)) return "naive";
    return "fleeting";
}

static std::string trim_num(double v) {
    std::ostringstream ss;
    ss << v;
    return ss.str();
}

std::string condition_spec(const Condition& cond) {
    if (std::holds_alternative<Perfect>(cond)) return "perfect";
    if (const auto* naive = std::get_if<Naive>(&cond))
        return "naive:" + trim_num(naive->alpha);
    const auto& f = std::get<Fleeting>(cond);
    return "fleeting:" + trim_num(f.alpha) + ":" + std::to_string(f.buffer);
}

Condition parse_condition(const std::string& spec) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : spec) {
        if (c == ':') {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    parts.push_back(cur);
    try {
        if (parts[0] == "perfect" && parts.size() == 1) return Perfect{};
        if (parts[0] == "naive" && parts.size() == 2)
            return Naive{std::stod(parts[1])};
        if (parts[0] == "fleeting" && parts.size() == 3)
            return Fleeting{std::stod(parts[1]), std::stoi(parts[2])};
    } catch (const std::exception&) {
        // fall through to the error below
    }
    throw std::invalid_argument(
        "condition spec must be perfect | naive:<alpha> | fleeting:<alpha>:<E>, got: " +
        spec);
}

std::string retention_curve_csv(const RetentionConfig& cfg) {
    std::ostringstream out;
    out << "d,retention\n";
    for (int d = 0; d < cfg.context; ++d) {
        out << d << ',' << retention_value(d, cfg) << '\n';
    }
    return out.str();
}

}  // namespace fmlm
