#include "fmlm/freq_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "fmlm/io.hpp"

namespace fmlm {

std::array<std::vector<int>, 5> quintile_partition(
    const std::vector<ResidualRecord>& records) {
    const int n = static_cast<int>(records.size());
    if (n < 5) throw std::invalid_argument("quintile_partition: need >= 5 records");
    for (const auto& r : records)
        if (!std::isfinite(r.residual))
            throw std::invalid_argument("quintile_partition: non-finite residual for " +
                                        r.word);

    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    // stable: ties keep input order
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return records[static_cast<std::size_t>(a)].log_freq <
               records[static_cast<std::size_t>(b)].log_freq;
    });

    // ceiling-first sizes: n = 7 -> (2,2,1,1,1)
    std::array<std::vector<int>, 5> groups;
    const int base = n / 5;
    const int rem = n % 5;
    int pos = 0;
    for (int q = 0; q < 5; ++q) {
        int size = base + (q < rem ? 1 : 0);
        groups[static_cast<std::size_t>(q)].assign(
            order.begin() + pos, order.begin() + pos + size);
        pos += size;
    }
    return groups;
}

namespace {

double group_mse(const std::vector<ResidualRecord>& records,
                 const std::vector<int>& group) {
    double sse = 0.0;
    for (int i : group) {
        double r = records[static_cast<std::size_t>(i)].residual;
        sse += r * r;
    }
    return sse / static_cast<double>(group.size());
}

}  // namespace

std::array<double, 5> quintile_mse_diff(const std::vector<ResidualRecord>& a,
                                        const std::vector<ResidualRecord>& b) {
    if (a.size() != b.size())
        throw std::invalid_argument("quintile_mse_diff: record counts differ");
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i].word != b[i].word || a[i].log_freq != b[i].log_freq)
            throw std::invalid_argument(
                "quintile_mse_diff: record lists differ at row " + std::to_string(i));
    auto groups = quintile_partition(a);
    std::array<double, 5> diff;
    for (int q = 0; q < 5; ++q)
        diff[static_cast<std::size_t>(q)] =
            group_mse(a, groups[static_cast<std::size_t>(q)]) -
            group_mse(b, groups[static_cast<std::size_t>(q)]);
    return diff;
}

QuintileReport under_over_sse(const std::vector<ResidualRecord>& records,
                              double reference_mean_error) {
    if (!(reference_mean_error > 0.0))
        throw std::invalid_argument("under_over_sse: reference mean error must be > 0");
    auto groups = quintile_partition(records);
    QuintileReport report;
    for (int q = 0; q < 5; ++q) {
        const auto& group = groups[static_cast<std::size_t>(q)];
        Quintile& out = report[static_cast<std::size_t>(q)];
        out.n = static_cast<int>(group.size());
        out.freq_lo = records[static_cast<std::size_t>(group.front())].log_freq;
        out.freq_hi = records[static_cast<std::size_t>(group.back())].log_freq;
        for (int i : group) {
            double r = records[static_cast<std::size_t>(i)].residual;
            if (r > 0.0)
                out.sse_under += r * r;  // observed slower than predicted
            else
                out.sse_over += r * r;
        }
        out.mse = (out.sse_under + out.sse_over) / static_cast<double>(out.n);
        const double denom = reference_mean_error * static_cast<double>(out.n);
        out.norm_under = out.sse_under / denom;
        out.norm_over = out.sse_over / denom;
    }
    return report;
}

std::vector<ResidualRecord> load_residuals_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open residuals file: " + path);
    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error("empty residuals file: " + path);
    auto header = split_csv_line(line);
    if (header.size() < 3 || header[0] != "word" || header[1] != "log_freq" ||
        header[2] != "residual")
        throw std::runtime_error(path + ": expected header word,log_freq,residual");
    std::vector<ResidualRecord> records;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        if (fields.size() < 3)
            throw std::runtime_error(path + ": short residual row");
        records.push_back(
            {fields[0], std::stod(fields[1]), std::stod(fields[2])});
    }
    return records;
}

std::string quintile_report_csv(const QuintileReport& report) {
    std::ostringstream out;
    out << "quintile,freq_lo,freq_hi,n,mse,sse_under,sse_over,norm_under,norm_over\n";
    for (int q = 0; q < 5; ++q) {
        const auto& r = report[static_cast<std::size_t>(q)];
        out << (q + 1) << ',' << fmt_double(r.freq_lo) << ',' << fmt_double(r.freq_hi)
            << ',' << r.n << ',' << fmt_double(r.mse) << ','
            << fmt_double(r.sse_under) << ',' << fmt_double(r.sse_over) << ','
            << fmt_double(r.norm_under) << ',' << fmt_double(r.norm_over) << '\n';
    }
    return out.str();
}

}  // namespace fmlm
