#include "bpi/plot.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "bpi/agents.hpp"

namespace bpi {

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument(fmt::format("cannot open {}", path.string()));
  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
  };
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument(fmt::format("{} is empty", path.string()));
  table.header = split(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells.size() != table.header.size()) {
      throw std::invalid_argument(fmt::format("{}: row has {} cells, header has {}", path.string(),
                                              cells.size(), table.header.size()));
    }
    table.rows.push_back(std::move(cells));
  }
  return table;
}

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 400.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 20.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 50.0;

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};

struct Frame {
  double x0, x1, y0, y1;
  double px(double x) const { return kLeft + (x - x0) / (x1 - x0) * (kWidth - kLeft - kRight); }
  double py(double y) const { return kHeight - kBottom - (y - y0) / (y1 - y0) * (kHeight - kTop - kBottom); }
};

std::string header(const std::string& title) {
  return fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" "
      "viewBox=\"0 0 {0} {1}\" font-family=\"sans-serif\" font-size=\"12\">\n"
      "<rect width=\"{0}\" height=\"{1}\" fill=\"white\"/>\n"
      "<text x=\"{2:.1f}\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">{3}</text>\n",
      kWidth, kHeight, kWidth / 2, title);
}

// Axes with evenly spaced ticks; tick labels pass through `label`.
template <class Label>
std::string axes(const Frame& f, const std::string& xlabel, const std::string& ylabel,
                 Label label, int x_ticks = 5, int y_ticks = 5) {
  std::string out;
  const double bottom = kHeight - kBottom;
  out += fmt::format(
      "<path d=\"M{:.1f} {:.1f} H{:.1f} M{:.1f} {:.1f} V{:.1f}\" stroke=\"black\" fill=\"none\"/>\n",
      kLeft, bottom, kWidth - kRight, kLeft, bottom, kTop);
  for (int i = 0; i <= x_ticks; ++i) {
    const double x = f.x0 + (f.x1 - f.x0) * i / x_ticks;
    out += fmt::format(
        "<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">{}</text>\n", f.px(x), bottom + 18,
        fmt::format("{:.4g}", x));
  }
  for (int i = 0; i <= y_ticks; ++i) {
    const double y = f.y0 + (f.y1 - f.y0) * i / y_ticks;
    out += fmt::format(
        "<line x1=\"{0:.1f}\" x2=\"{1:.1f}\" y1=\"{2:.1f}\" y2=\"{2:.1f}\" stroke=\"#dddddd\"/>\n"
        "<text x=\"{3:.1f}\" y=\"{4:.1f}\" text-anchor=\"end\">{5}</text>\n",
        kLeft, kWidth - kRight, f.py(y), kLeft - 6, f.py(y) + 4, label(y));
  }
  out += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">{}</text>\n",
                     (kLeft + kWidth - kRight) / 2, kHeight - 12, xlabel);
  out += fmt::format(
      "<text x=\"16\" y=\"{0:.1f}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {0:.1f})\">{1}</text>\n",
      (kTop + kHeight - kBottom) / 2, ylabel);
  return out;
}

std::string log_label(double y) { return fmt::format("1e{:.3g}", y); }

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(fmt::format("cannot write {}", path.string()));
  out << text;
}

std::size_t column(const CsvTable& t, const std::string& name) {
  const auto it = std::find(t.header.begin(), t.header.end(), name);
  if (it == t.header.end()) throw std::invalid_argument(fmt::format("missing column {}", name));
  return static_cast<std::size_t>(it - t.header.begin());
}

std::string join(const std::vector<std::string>& cells) {
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + cells[i];
  return out;
}

}  // namespace

std::string render_curves_svg(const std::vector<EvalRow>& rows) {
  if (rows.empty()) throw std::invalid_argument("no evaluation rows to plot");
  std::map<long, std::vector<double>> by_t;
  for (const auto& r : rows) by_t[r.t].push_back(r.metric);

  struct Point { double t, lo, mid, hi; };
  std::vector<Point> pts;
  double y_min = 0.0;
  for (const auto& [t, values] : by_t) {
    pts.push_back({static_cast<double>(t), interpolated_quantile(values, 0.1),
                   interpolated_quantile(values, 0.5), interpolated_quantile(values, 0.9)});
    y_min = std::min(y_min, pts.back().lo);
  }
  const double t_max = std::max(pts.back().t, 1.0);
  const Frame f{0.0, t_max, std::floor(y_min * 10.0) / 10.0, 1.0};

  std::string svg = header("policy quality over time");
  svg += axes(f, "t", "metric", [](double y) { return fmt::format("{:.2f}", y); });
  std::string band = "<polygon fill=\"#1f77b4\" fill-opacity=\"0.25\" stroke=\"none\" points=\"";
  for (const auto& p : pts) band += fmt::format("{:.2f},{:.2f} ", f.px(p.t), f.py(p.hi));
  for (auto it = pts.rbegin(); it != pts.rend(); ++it) {
    band += fmt::format("{:.2f},{:.2f} ", f.px(it->t), f.py(it->lo));
  }
  band.back() = '"';
  svg += band + "/>\n";
  std::string line = "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\" points=\"";
  for (const auto& p : pts) line += fmt::format("{:.2f},{:.2f} ", f.px(p.t), f.py(p.mid));
  line.back() = '"';
  svg += line + "/>\n";
  svg += fmt::format(
      "<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"end\">median and 10-90% band over {} seeds</text>\n",
      kWidth - kRight, kTop + 14, by_t.begin()->second.size());
  return svg + "</svg>\n";
}

std::string render_bounds_svg(const std::vector<BoundsRow>& rows, int size) {
  std::vector<std::string> allocs;
  std::vector<std::string> evals;
  std::vector<const BoundsRow*> picked;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& r : rows) {
    if (r.size != size || !(r.value > 0.0) || !std::isfinite(r.value)) continue;
    picked.push_back(&r);
    if (std::find(allocs.begin(), allocs.end(), r.alloc) == allocs.end()) allocs.push_back(r.alloc);
    if (std::find(evals.begin(), evals.end(), r.eval_bound) == evals.end()) evals.push_back(r.eval_bound);
    lo = std::min(lo, std::log10(r.value));
    hi = std::max(hi, std::log10(r.value));
  }
  if (picked.empty()) throw std::invalid_argument(fmt::format("no bound values for size {}", size));
  const Frame f{-0.5, static_cast<double>(allocs.size()) - 0.5, std::floor(lo - 0.1),
                std::ceil(hi + 0.1)};

  std::string svg = header(fmt::format("bounds at each minimizer, |S| = {}", size));
  svg += axes(f, "allocation", "bound value", log_label, 0,
              static_cast<int>(f.y1 - f.y0));
  for (std::size_t i = 0; i < allocs.size(); ++i) {
    svg += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">{}</text>\n",
                       f.px(static_cast<double>(i)), kHeight - kBottom + 18, allocs[i]);
  }
  for (const auto* r : picked) {
    const auto a = std::find(allocs.begin(), allocs.end(), r->alloc) - allocs.begin();
    const auto e = std::find(evals.begin(), evals.end(), r->eval_bound) - evals.begin();
    const double x = f.px(static_cast<double>(a) + 0.15 * (static_cast<double>(e) - 0.5));
    svg += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"5\" fill=\"{}\"/>\n", x,
                       f.py(std::log10(r->value)), kPalette[e % 5]);
  }
  for (std::size_t e = 0; e < evals.size(); ++e) {
    const double y = kTop + 14 + 16.0 * static_cast<double>(e);
    svg += fmt::format(
        "<circle cx=\"{:.1f}\" cy=\"{:.1f}\" r=\"5\" fill=\"{}\"/>"
        "<text x=\"{:.1f}\" y=\"{:.1f}\">{}</text>\n",
        kWidth - kRight - 80, y - 4, kPalette[e % 5], kWidth - kRight - 70, y, evals[e]);
  }
  return svg + "</svg>\n";
}

std::string render_quantities_svg(const std::vector<QuantitiesRow>& rows) {
  if (rows.empty()) throw std::invalid_argument("no quantity rows to plot");
  struct Series { const char* name; double QuantitiesRow::*field; };
  const Series series[] = {{"delta_min", &QuantitiesRow::delta_min},
                           {"span_max", &QuantitiesRow::span_max},
                           {"var_max", &QuantitiesRow::var_max},
                           {"moment_root_max", &QuantitiesRow::moment_root_max}};
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  double x_lo = lo;
  double x_hi = hi;
  for (const auto& r : rows) {
    x_lo = std::min(x_lo, static_cast<double>(r.size));
    x_hi = std::max(x_hi, static_cast<double>(r.size));
    for (const auto& s : series) {
      if (r.*s.field > 0.0) {
        lo = std::min(lo, std::log10(r.*s.field));
        hi = std::max(hi, std::log10(r.*s.field));
      }
    }
  }
  if (!std::isfinite(lo)) throw std::invalid_argument("all quantities are zero");
  if (x_hi == x_lo) x_hi = x_lo + 1.0;
  const Frame f{x_lo, x_hi, std::floor(lo - 0.1), std::ceil(hi + 0.1)};
  std::string svg = header("instance quantities");
  svg += axes(f, "|S|", "value", log_label, 5, static_cast<int>(f.y1 - f.y0));
  int idx = 0;
  for (const auto& s : series) {
    std::string line = fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"2\" points=\"",
                                   kPalette[idx]);
    std::string marks;
    for (const auto& r : rows) {
      if (!(r.*s.field > 0.0)) continue;
      const double x = f.px(r.size);
      const double y = f.py(std::log10(r.*s.field));
      line += fmt::format("{:.2f},{:.2f} ", x, y);
      marks += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"3\" fill=\"{}\"/>\n", x, y,
                           kPalette[idx]);
    }
    line += "\"/>\n";
    const double ly = kTop + 14 + 16.0 * idx;
    svg += line + marks +
           fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" fill=\"{}\">{}</text>\n",
                       kWidth - kRight - 130, ly, kPalette[idx], s.name);
    ++idx;
  }
  return svg + "</svg>\n";
}

std::vector<std::filesystem::path> render_plots(const std::filesystem::path& input,
                                                const std::filesystem::path& out_dir) {
  const CsvTable table = read_csv(input);
  if (table.rows.empty()) {
    throw std::invalid_argument(fmt::format("{} has no data rows", input.string()));
  }
  std::filesystem::create_directories(out_dir);
  const std::string kind = join(table.header);
  std::vector<std::filesystem::path> written;

  if (kind == kRunsHeader) {
    std::vector<EvalRow> rows;
    for (const auto& c : table.rows) {
      rows.push_back({std::stoi(c[0]), std::stol(c[1]), std::stod(c[2]), std::stol(c[3]),
                      std::stod(c[4])});
    }
    written.push_back(out_dir / "curves.svg");
    write_file(written.back(), render_curves_svg(rows));
  } else if (kind == kBoundsHeader) {
    std::vector<BoundsRow> rows;
    std::vector<int> sizes;
    for (const auto& c : table.rows) {
      rows.push_back({std::stoi(c[column(table, "size")]), c[column(table, "alloc")],
                      c[column(table, "eval_bound")], std::stod(c[column(table, "value")])});
      if (std::find(sizes.begin(), sizes.end(), rows.back().size) == sizes.end()) {
        sizes.push_back(rows.back().size);
      }
    }
    for (int size : sizes) {
      written.push_back(out_dir / fmt::format("bounds_size{}.svg", size));
      write_file(written.back(), render_bounds_svg(rows, size));
    }
  } else if (kind == kQuantitiesHeader) {
    std::vector<QuantitiesRow> rows;
    for (const auto& c : table.rows) {
      rows.push_back({std::stoi(c[0]), std::stod(c[1]), std::stod(c[2]), std::stod(c[3]),
                      std::stod(c[4]), std::stod(c[5]), std::stod(c[6]), std::stod(c[7])});
    }
    written.push_back(out_dir / "quantities.svg");
    write_file(written.back(), render_quantities_svg(rows));
  } else {
    throw std::invalid_argument(fmt::format("unrecognized CSV header '{}'", kind));
  }
  return written;
}

}  // namespace bpi
