#include "avf/io.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <mutex>
#include <sstream>
#include <thread>

namespace avf {

std::string fmt_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    // shorter representations that round-trip keep the files readable
    for (int prec = 1; prec <= 16; ++prec) {
        char shorter[40];
        std::snprintf(shorter, sizeof(shorter), "%.*g", prec, x);
        if (std::strtod(shorter, nullptr) == x)
            return shorter;
    }
    return buf;
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot open for writing: " + path.string());
    out << content;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open for reading: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string csv_table(const std::vector<std::string>& header,
                      const std::vector<std::vector<std::string>>& rows) {
    std::ostringstream out;
    for (size_t i = 0; i < header.size(); ++i)
        out << (i ? "," : "") << header[i];
    out << "\n";
    for (const auto& row : rows) {
        for (size_t i = 0; i < row.size(); ++i)
            out << (i ? "," : "") << row[i];
        out << "\n";
    }
    return out.str();
}

std::string matrix_csv(const Mat& m, const std::string& col_prefix, const std::string& comment) {
    std::ostringstream out;
    if (!comment.empty())
        out << "# " << comment << "\n";
    for (int j = 0; j < m.cols(); ++j)
        out << (j ? "," : "") << col_prefix << j;
    out << "\n";
    for (int i = 0; i < m.rows(); ++i) {
        for (int j = 0; j < m.cols(); ++j)
            out << (j ? "," : "") << fmt_double(m(i, j));
        out << "\n";
    }
    return out.str();
}

namespace {

void diverging_color(double t, int& r, int& g, int& b) {
    // t in [-1, 1]: blue -> white -> red
    t = std::max(-1.0, std::min(1.0, t));
    if (t < 0) {
        r = static_cast<int>(255 * (1.0 + t));
        g = static_cast<int>(255 * (1.0 + t));
        b = 255;
    } else {
        r = 255;
        g = static_cast<int>(255 * (1.0 - t));
        b = static_cast<int>(255 * (1.0 - t));
    }
}

} // namespace

std::string svg_heatmap(const GridSpec& spec, const std::vector<int>& cell_to_state,
                        const Vec& visible_values) {
    constexpr int kCell = 16;
    double scale = 0.0;
    for (int i = 0; i < visible_values.size(); ++i)
        scale = std::max(scale, std::abs(visible_values[i]));
    if (scale == 0.0)
        scale = 1.0;

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << spec.cols * kCell
        << "\" height=\"" << spec.rows * kCell << "\">\n";
    for (int r = 0; r < spec.rows; ++r) {
        for (int c = 0; c < spec.cols; ++c) {
            const int s = cell_to_state[static_cast<size_t>(r) * spec.cols + c];
            std::string fill = "#303030";
            if (s >= 0) {
                int cr, cg, cb;
                diverging_color(visible_values[s] / scale, cr, cg, cb);
                char buf[8];
                std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", cr, cg, cb);
                fill = buf;
            }
            out << "<rect x=\"" << c * kCell << "\" y=\"" << r * kCell << "\" width=\"" << kCell
                << "\" height=\"" << kCell << "\" fill=\"" << fill << "\"/>\n";
        }
    }
    out << "</svg>\n";
    return out.str();
}

void parallel_for(int n, int jobs, const std::function<void(int)>& fn) {
    if (jobs <= 0)
        jobs = static_cast<int>(std::thread::hardware_concurrency());
    jobs = std::max(1, std::min(jobs, n));
    if (jobs == 1) {
        for (int i = 0; i < n; ++i)
            fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> workers;
    workers.reserve(jobs);
    for (int t = 0; t < jobs; ++t) {
        workers.emplace_back([&] {
            while (true) {
                const int i = next.fetch_add(1);
                if (i >= n)
                    return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error)
                        error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& w : workers)
        w.join();
    if (error)
        std::rethrow_exception(error);
}

} // namespace avf
