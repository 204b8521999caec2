#include "protoid/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "protoid/error.hpp"

namespace protoid {

namespace fs = std::filesystem;

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                    "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string fmt(double v, int precision = 6) {
  std::ostringstream os;
  os.precision(precision);
  os << v;
  return os.str();
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

void validate_results(const std::vector<SweepResult>& results) {
  require(!results.empty(), ErrorKind::InvalidInput, "no results to report");
  for (const SweepResult& r : results) {
    require(!r.points.empty(), ErrorKind::InvalidInput, "result '" + r.model_id + "' has no points");
    for (const SweepPoint& p : r.points) {
      require(std::isfinite(p.snr_db) && p.accuracy >= 0.0 && p.accuracy <= 1.0, ErrorKind::InvalidInput,
              "result '" + r.model_id + "' has an invalid point");
      require(p.confusion.counts.rows() == p.confusion.counts.cols() && p.confusion.counts.rows() > 0,
              ErrorKind::InvalidInput, "result '" + r.model_id + "' has a malformed confusion matrix");
    }
  }
}

std::vector<ChannelModel> channels_of(const SweepResult& r) {
  std::vector<ChannelModel> out;
  for (const SweepPoint& p : r.points) {
    if (std::find(out.begin(), out.end(), p.channel) == out.end()) out.push_back(p.channel);
  }
  return out;
}

std::string safe_name(const std::string& s) {
  std::string out;
  for (char c : s) out += std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' ? c : '_';
  return out;
}

}  // namespace

std::vector<std::string> class_names(Index num_classes) {
  std::vector<std::string> names;
  for (Index c = 0; c < num_classes; ++c) {
    names.push_back(c < static_cast<Index>(kAllProtocols.size())
                        ? std::string(to_string(kAllProtocols[static_cast<std::size_t>(c)]))
                        : "c" + std::to_string(c));
  }
  return names;
}

std::string sweep_csv(const std::vector<SweepResult>& results) {
  std::ostringstream os;
  os << "model,channel,snr_db,accuracy,trials\n";
  for (const SweepResult& r : results) {
    for (const SweepPoint& p : r.points) {
      os << r.model_id << ',' << to_string(p.channel) << ',' << fmt(p.snr_db) << ',' << fmt(p.accuracy, 9) << ','
         << p.trials << '\n';
    }
  }
  return os.str();
}

std::string confusion_csv(const std::vector<SweepResult>& results, const std::vector<std::string>& names) {
  std::ostringstream os;
  os << "model,channel,snr_db,truth,predicted,count\n";
  for (const SweepResult& r : results) {
    for (const SweepPoint& p : r.points) {
      const auto& c = p.confusion.counts;
      for (Index i = 0; i < c.rows(); ++i) {
        for (Index j = 0; j < c.cols(); ++j) {
          os << r.model_id << ',' << to_string(p.channel) << ',' << fmt(p.snr_db) << ','
             << names[static_cast<std::size_t>(i)] << ',' << names[static_cast<std::size_t>(j)] << ',' << c(i, j)
             << '\n';
        }
      }
    }
  }
  return os.str();
}

std::string accuracy_plot_svg(const std::vector<SweepResult>& results, const std::string& title) {
  validate_results(results);
  const double w = 760, h = 480, left = 70, right = 190, top = 40, bottom = 60;
  const double pw = w - left - right, ph = h - top - bottom;
  double lo = results.front().points.front().snr_db, hi = lo;
  for (const SweepResult& r : results) {
    for (const SweepPoint& p : r.points) {
      lo = std::min(lo, p.snr_db);
      hi = std::max(hi, p.snr_db);
    }
  }
  if (hi == lo) hi = lo + 1.0;
  auto xs = [&](double snr) { return left + (snr - lo) / (hi - lo) * pw; };
  auto ys = [&](double acc) { return top + (1.0 - acc) * ph; };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!title.empty()) {
    os << "<text x=\"" << left + pw / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << escape(title)
       << "</text>\n";
  }
  for (int k = 0; k <= 10; ++k) {
    const double a = k / 10.0;
    os << "<line x1=\"" << left << "\" x2=\"" << left + pw << "\" y1=\"" << ys(a) << "\" y2=\"" << ys(a)
       << "\" stroke=\"#e0e0e0\"/>\n";
    os << "<text x=\"" << left - 8 << "\" y=\"" << ys(a) + 4 << "\" text-anchor=\"end\">" << fmt(a, 2) << "</text>\n";
  }
  std::vector<double> ticks;
  for (const SweepPoint& p : results.front().points) {
    if (std::find(ticks.begin(), ticks.end(), p.snr_db) == ticks.end()) ticks.push_back(p.snr_db);
  }
  for (double t : ticks) {
    os << "<line x1=\"" << xs(t) << "\" x2=\"" << xs(t) << "\" y1=\"" << top << "\" y2=\"" << top + ph
       << "\" stroke=\"#f0f0f0\"/>\n";
    os << "<text x=\"" << xs(t) << "\" y=\"" << top + ph + 18 << "\" text-anchor=\"middle\">" << fmt(t) << "</text>\n";
  }
  os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  os << "<text x=\"" << left + pw / 2 << "\" y=\"" << h - 18 << "\" text-anchor=\"middle\">SNR (dB)</text>\n";
  os << "<text transform=\"translate(20," << top + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">Accuracy</text>\n";

  int series = 0;
  for (const SweepResult& r : results) {
    for (ChannelModel ch : channels_of(r)) {
      const char* color = kPalette[series % 8];
      std::vector<std::pair<double, double>> pts;
      for (const SweepPoint& p : r.points) {
        if (p.channel == ch) pts.emplace_back(p.snr_db, p.accuracy);
      }
      std::sort(pts.begin(), pts.end());
      os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
      for (const auto& [s, a] : pts) os << xs(s) << ',' << ys(a) << ' ';
      os << "\"/>\n";
      for (const auto& [s, a] : pts) {
        os << "<circle cx=\"" << xs(s) << "\" cy=\"" << ys(a) << "\" r=\"3\" fill=\"" << color << "\"/>\n";
      }
      const double ly = top + 10 + 20 * series;
      os << "<line x1=\"" << left + pw + 15 << "\" x2=\"" << left + pw + 40 << "\" y1=\"" << ly << "\" y2=\"" << ly
         << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
      os << "<text x=\"" << left + pw + 46 << "\" y=\"" << ly + 4 << "\">"
         << escape(r.model_id + " / " + std::string(to_string(ch))) << "</text>\n";
      ++series;
    }
  }
  os << "</svg>\n";
  return os.str();
}

std::string confusion_svg(const ConfusionMatrix& cm, const std::vector<std::string>& names, const std::string& title) {
  const Index n = cm.counts.rows();
  require(n > 0 && cm.counts.cols() == n && static_cast<Index>(names.size()) >= n, ErrorKind::InvalidInput,
          "malformed confusion matrix");
  const double cell = 60, left = 90, top = 60;
  const double w = left + cell * static_cast<double>(n) + 30;
  const double h = top + cell * static_cast<double>(n) + 60;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!title.empty()) {
    os << "<text x=\"" << w / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << escape(title)
       << "</text>\n";
  }
  for (Index i = 0; i < n; ++i) {
    const double row_total = static_cast<double>(cm.counts.row(i).sum());
    for (Index j = 0; j < n; ++j) {
      const double frac = row_total > 0 ? static_cast<double>(cm.counts(i, j)) / row_total : 0.0;
      const int shade = static_cast<int>(std::lround(255.0 * (1.0 - frac)));
      const double x = left + cell * static_cast<double>(j);
      const double y = top + cell * static_cast<double>(i);
      os << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell << "\" height=\"" << cell << "\" fill=\"rgb("
         << shade << ',' << shade << ",255)\" stroke=\"#999\"/>\n";
      os << "<text x=\"" << x + cell / 2 << "\" y=\"" << y + cell / 2 + 4 << "\" text-anchor=\"middle\" fill=\""
         << (frac > 0.5 ? "white" : "black") << "\">" << cm.counts(i, j) << "</text>\n";
    }
    os << "<text x=\"" << left - 8 << "\" y=\"" << top + cell * (static_cast<double>(i) + 0.5) + 4
       << "\" text-anchor=\"end\">" << escape(names[static_cast<std::size_t>(i)]) << "</text>\n";
    os << "<text x=\"" << left + cell * (static_cast<double>(i) + 0.5) << "\" y=\"" << top - 8
       << "\" text-anchor=\"middle\">" << escape(names[static_cast<std::size_t>(i)]) << "</text>\n";
  }
  os << "<text x=\"" << left + cell * static_cast<double>(n) / 2 << "\" y=\"" << top + cell * static_cast<double>(n) + 30
     << "\" text-anchor=\"middle\">Predicted</text>\n";
  os << "<text transform=\"translate(20," << top + cell * static_cast<double>(n) / 2
     << ") rotate(-90)\" text-anchor=\"middle\">True</text>\n";
  os << "</svg>\n";
  return os.str();
}

std::vector<fs::path> write_report(const fs::path& out_dir, const std::vector<SweepResult>& results) {
  validate_results(results);
  const Index classes = results.front().points.front().confusion.counts.rows();
  for (const SweepResult& r : results) {
    for (const SweepPoint& p : r.points) {
      require(p.confusion.counts.rows() == classes, ErrorKind::InvalidInput, "results disagree on class count");
    }
  }
  const std::vector<std::string> names = class_names(classes);

  std::vector<std::pair<fs::path, std::string>> files;
  files.emplace_back(out_dir / "sweep.csv", sweep_csv(results));
  files.emplace_back(out_dir / "confusion.csv", confusion_csv(results, names));
  files.emplace_back(out_dir / "accuracy_vs_snr.svg", accuracy_plot_svg(results, "Accuracy vs SNR"));
  for (const SweepResult& r : results) {
    for (ChannelModel ch : channels_of(r)) {
      const SweepPoint* best = nullptr;
      for (const SweepPoint& p : r.points) {
        if (p.channel == ch && (best == nullptr || p.snr_db > best->snr_db)) best = &p;
      }
      const std::string label = r.model_id + " / " + std::string(to_string(ch)) + " / " + fmt(best->snr_db) + " dB";
      files.emplace_back(out_dir / ("confusion_" + safe_name(r.model_id) + "_" + std::string(to_string(ch)) + ".svg"),
                         confusion_svg(best->confusion, names, label));
    }
  }

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  require(!ec, ErrorKind::IoError, "cannot create " + out_dir.string() + ": " + ec.message());
  std::vector<fs::path> written;
  try {
    for (const auto& [path, text] : files) {
      std::ofstream out(path);
      require(static_cast<bool>(out), ErrorKind::IoError, "cannot write " + path.string());
      written.push_back(path);
      out << text;
      out.close();
      require(static_cast<bool>(out), ErrorKind::IoError, "write failed for " + path.string());
    }
  } catch (...) {
    for (const fs::path& p : written) fs::remove(p, ec);
    throw;
  }
  return written;
}

}  // namespace protoid
