#ifndef ODFLOW_ROUTE_HPP
#define ODFLOW_ROUTE_HPP

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "odflow/csv.hpp"
#include "odflow/error.hpp"

namespace odflow {

/// Edge cost as a function of the normalized edge flow z = y / N.
///   Constant: T
///   Affine:   a + b z
///   Bpr:      t0 (1 + alpha (z / c)^4)
class LatencyFn {
 public:
  enum class Kind { Constant, Affine, Bpr };

  static LatencyFn constant(double cost) {
    require(std::isfinite(cost) && cost >= 0, ErrorCode::InvalidArgument, "constant latency must be >= 0");
    return LatencyFn(Kind::Constant, cost, 0.0, 1.0);
  }

  static LatencyFn affine(double a, double b) {
    require(std::isfinite(a) && std::isfinite(b) && a >= 0 && b >= 0, ErrorCode::InvalidArgument,
            "affine latency needs a >= 0 and b >= 0");
    return LatencyFn(Kind::Affine, a, b, 1.0);
  }

  static LatencyFn bpr(double t0, double capacity, double alpha) {
    require(std::isfinite(t0) && t0 >= 0 && capacity > 0 && std::isfinite(capacity) && alpha >= 0 &&
                std::isfinite(alpha),
            ErrorCode::InvalidArgument, "BPR latency needs t0 >= 0, capacity > 0, alpha >= 0");
    return LatencyFn(Kind::Bpr, t0, alpha, capacity);
  }

  Kind kind() const { return kind_; }

  double operator()(double z) const {
    switch (kind_) {
      case Kind::Constant: return a_;
      case Kind::Affine: return a_ + b_ * z;
      case Kind::Bpr: {
        const double r = z / c_;
        return a_ * (1.0 + b_ * r * r * r * r);
      }
    }
    return 0.0;
  }

  double derivative(double z) const {
    switch (kind_) {
      case Kind::Constant: return 0.0;
      case Kind::Affine: return b_;
      case Kind::Bpr: {
        const double r = z / c_;
        return 4.0 * a_ * b_ * r * r * r / c_;
      }
    }
    return 0.0;
  }

  /// Integral of the latency from 0 to z.
  double integral(double z) const {
    switch (kind_) {
      case Kind::Constant: return a_ * z;
      case Kind::Affine: return a_ * z + 0.5 * b_ * z * z;
      case Kind::Bpr: {
        const double c4 = c_ * c_ * c_ * c_;
        return a_ * (z + b_ * std::pow(z, 5) / (5.0 * c4));
      }
    }
    return 0.0;
  }

  bool strictly_increasing() const { return kind_ != Kind::Constant && b_ > 0.0 && (kind_ != Kind::Bpr || a_ > 0); }

  std::string describe() const {
    switch (kind_) {
      case Kind::Constant: return "constant," + csv::format(a_);
      case Kind::Affine: return "affine," + csv::format(a_) + "," + csv::format(b_);
      case Kind::Bpr: return "bpr," + csv::format(a_) + "," + csv::format(c_) + "," + csv::format(b_);
    }
    return {};
  }

 private:
  LatencyFn(Kind kind, double a, double b, double c) : kind_(kind), a_(a), b_(b), c_(c) {}

  Kind kind_;
  double a_;  // T, a, or t0
  double b_;  // b, or alpha
  double c_;  // BPR capacity
};

struct Edge {
  std::string id;
  std::string tail;
  std::string head;
  LatencyFn latency;
};

/// Directed network with one origin and one destination.
struct Network {
  std::vector<Edge> edges;
  std::string source;
  std::string sink;

  std::size_t edge_count() const { return edges.size(); }
};

inline void validate(const Network& net) {
  require(net.source != net.sink, ErrorCode::InvalidArgument, "source and sink must differ");
  require(!net.edges.empty(), ErrorCode::InvalidArgument, "network has no edges");
}

/// Parses `source=<id>,sink=<id>` followed by rows
/// `edge_id,tail,head,kind,params...` (an optional `edge_id,...` column
/// header is skipped). Kinds: `constant,T`, `affine,a,b`, `bpr,t0,capacity,alpha`.
inline Network parse_network(const std::vector<std::string>& lines, const std::string& origin = "network") {
  require(!lines.empty(), ErrorCode::ParseError, origin + ": empty network file");
  Network net;
  for (auto kv : csv::split(lines.front())) {
    const auto eq = kv.find('=');
    require(eq != std::string_view::npos, ErrorCode::ParseError, origin + ": first line must be source=..,sink=..");
    const auto key = csv::trim(kv.substr(0, eq));
    const auto val = std::string(csv::trim(kv.substr(eq + 1)));
    if (key == "source") net.source = val;
    else if (key == "sink") net.sink = val;
    else fail(ErrorCode::ParseError, origin + ": unknown key '" + std::string(key) + "'");
  }
  require(!net.source.empty() && !net.sink.empty(), ErrorCode::ParseError, origin + ": source and sink required");
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto f = csv::split(lines[r]);
    if (r == 1 && !f.empty() && f[0] == "edge_id") continue;
    const auto ctx = origin + ":" + std::to_string(r + 1);
    require(f.size() >= 5, ErrorCode::ParseError, ctx + ": expected edge_id,tail,head,kind,params...");
    auto num = [&](std::size_t i) { return csv::parse_double(f[i], ctx); };
    const auto kind = f[3];
    LatencyFn lat = LatencyFn::constant(0.0);
    if (kind == "constant") {
      require(f.size() == 5, ErrorCode::ParseError, ctx + ": constant takes 1 parameter");
      lat = LatencyFn::constant(num(4));
    } else if (kind == "affine") {
      require(f.size() == 6, ErrorCode::ParseError, ctx + ": affine takes 2 parameters");
      lat = LatencyFn::affine(num(4), num(5));
    } else if (kind == "bpr") {
      require(f.size() == 7, ErrorCode::ParseError, ctx + ": bpr takes 3 parameters");
      lat = LatencyFn::bpr(num(4), num(5), num(6));
    } else {
      fail(ErrorCode::ParseError, ctx + ": unknown latency kind '" + std::string(kind) + "'");
    }
    net.edges.push_back({std::string(f[0]), std::string(f[1]), std::string(f[2]), lat});
  }
  validate(net);
  return net;
}

inline Network load_network(const std::filesystem::path& path) {
  return parse_network(csv::read_lines(path), path.string());
}

inline std::string network_text(const Network& net) {
  std::ostringstream out;
  out << "source=" << net.source << ",sink=" << net.sink << '\n';
  out << "edge_id,tail,head,kind,params\n";
  for (const auto& e : net.edges) out << e.id << ',' << e.tail << ',' << e.head << ',' << e.latency.describe() << '\n';
  return out.str();
}

/// Source-to-sink paths as edge-index sequences and their edge-path
/// incidence matrix theta (|E| x m).
struct PathSet {
  std::vector<std::vector<std::size_t>> paths;
  Eigen::MatrixXd theta;
  bool truncated = false;

  Eigen::Index size() const { return static_cast<Eigen::Index>(paths.size()); }
};

inline constexpr std::size_t kDefaultMaxPaths = 10'000;

inline Eigen::MatrixXd incidence(const std::vector<std::vector<std::size_t>>& paths, std::size_t edges) {
  Eigen::MatrixXd theta = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(edges), static_cast<Eigen::Index>(paths.size()));
  for (std::size_t p = 0; p < paths.size(); ++p)
    for (auto e : paths[p]) theta(static_cast<Eigen::Index>(e), static_cast<Eigen::Index>(p)) = 1.0;
  return theta;
}

/// All simple source-to-sink paths, in lexicographic order of their
/// edge-index sequences, truncated at max_paths (truncated flag set).
inline PathSet enumerate_paths(const Network& net, std::size_t max_paths = kDefaultMaxPaths) {
  validate(net);
  require(max_paths >= 1, ErrorCode::InvalidArgument, "max_paths must be >= 1");
  std::map<std::string, std::vector<std::size_t>> out_edges;
  for (std::size_t e = 0; e < net.edges.size(); ++e) out_edges[net.edges[e].tail].push_back(e);

  PathSet ps;
  std::vector<std::size_t> stack;
  std::vector<std::string> visited{net.source};
  auto dfs = [&](auto&& self, const std::string& node) -> void {
    if (ps.truncated) return;
    if (node == net.sink) {
      if (ps.paths.size() >= max_paths) {
        ps.truncated = true;
        return;
      }
      ps.paths.push_back(stack);
      return;
    }
    const auto it = out_edges.find(node);
    if (it == out_edges.end()) return;
    for (auto e : it->second) {
      const auto& head = net.edges[e].head;
      if (std::find(visited.begin(), visited.end(), head) != visited.end()) continue;
      stack.push_back(e);
      visited.push_back(head);
      self(self, head);
      visited.pop_back();
      stack.pop_back();
    }
  };
  dfs(dfs, net.source);
  require(!ps.paths.empty(), ErrorCode::NoPath, "no path from " + net.source + " to " + net.sink);
  ps.theta = incidence(ps.paths, net.edges.size());
  return ps;
}

inline std::string pathset_csv(const PathSet& ps, const Network& net) {
  std::ostringstream out;
  out << "path,edges\n";
  for (std::size_t p = 0; p < ps.paths.size(); ++p) {
    out << p << ',';
    for (std::size_t k = 0; k < ps.paths[p].size(); ++k) out << (k ? " " : "") << net.edges[ps.paths[p][k]].id;
    out << '\n';
  }
  return out.str();
}

/// Edge latencies at edge flows y (shares).
inline Eigen::VectorXd edge_costs(const Network& net, const Eigen::VectorXd& y) {
  Eigen::VectorXd tau(y.size());
  for (Eigen::Index e = 0; e < y.size(); ++e) tau[e] = net.edges[static_cast<std::size_t>(e)].latency(y[e]);
  return tau;
}

/// Path costs G = theta^T tau(theta x), x in shares.
inline Eigen::VectorXd path_costs(const PathSet& ps, const Network& net, const Eigen::VectorXd& x) {
  require(x.size() == ps.size(), ErrorCode::DimensionMismatch, "route flow has the wrong length");
  const Eigen::VectorXd y = ps.theta * x;
  return ps.theta.transpose() * edge_costs(net, y);
}

/// Beckmann potential: sum over edges of the latency integral up to y_e.
inline double beckmann_potential(const PathSet& ps, const Network& net, const Eigen::VectorXd& x) {
  require(x.size() == ps.size(), ErrorCode::DimensionMismatch, "route flow has the wrong length");
  const Eigen::VectorXd y = ps.theta * x;
  double psi = 0.0;
  for (Eigen::Index e = 0; e < y.size(); ++e) psi += net.edges[static_cast<std::size_t>(e)].latency.integral(y[e]);
  return psi;
}

/// Logit choice probabilities exp(-G_q / omega) / sum_p exp(-G_p / omega),
/// shifted by min G for stability.
inline Eigen::VectorXd logit_choice(const Eigen::VectorXd& G, double omega) {
  require(omega > 0, ErrorCode::InvalidArgument, "omega must be > 0");
  require(G.size() >= 1, ErrorCode::InvalidArgument, "empty cost vector");
  const double gmin = G.minCoeff();
  Eigen::VectorXd p = ((gmin - G.array()) / omega).exp().matrix();
  return p / p.sum();
}

}  // namespace odflow

#endif  // ODFLOW_ROUTE_HPP
