#pragma once

#include <cmath>
#include <cstddef>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "tscausal/dataset.hpp"
#include "tscausal/error.hpp"

namespace tscausal {

/// A planar agent trajectory sampled at a uniform interval dt (seconds),
/// coordinates in metres. Static objects are constant-position trajectories.
struct Trajectory {
  std::string agent_id;
  std::vector<double> x;
  std::vector<double> y;
  double dt = 1.0;
};

/// Which agent is observed and against which others (agents or fixed
/// points) its interaction features are computed.
struct InteractionSpec {
  std::string subject;
  std::vector<std::string> others;
};

inline Trajectory make_static_trajectory(const std::string& id, double px, double py,
                                         std::size_t n_samples, double dt) {
  Trajectory t;
  t.agent_id = id;
  t.x.assign(n_samples, px);
  t.y.assign(n_samples, py);
  t.dt = dt;
  return t;
}

namespace detail {

struct Kinematics {
  std::vector<double> speed;      // m/s
  std::vector<double> heading_x;  // unit heading, defaults to +x axis
  std::vector<double> heading_y;
  bool heading_ever_defined = false;
};

/// Speed by central finite differences (one-sided at the boundaries) and
/// heading as the direction of the velocity. Below 1e-6 m/s the heading
/// holds its last defined value; the initial heading is the +x axis.
inline Kinematics trajectory_kinematics(const Trajectory& traj) {
  const std::size_t n = traj.x.size();
  Kinematics k;
  k.speed.resize(n);
  k.heading_x.resize(n);
  k.heading_y.resize(n);

  double hx = 1.0, hy = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    double vx, vy;
    if (t == 0) {
      vx = (traj.x[1] - traj.x[0]) / traj.dt;
      vy = (traj.y[1] - traj.y[0]) / traj.dt;
    } else if (t == n - 1) {
      vx = (traj.x[n - 1] - traj.x[n - 2]) / traj.dt;
      vy = (traj.y[n - 1] - traj.y[n - 2]) / traj.dt;
    } else {
      vx = (traj.x[t + 1] - traj.x[t - 1]) / (2.0 * traj.dt);
      vy = (traj.y[t + 1] - traj.y[t - 1]) / (2.0 * traj.dt);
    }
    const double speed = std::hypot(vx, vy);
    k.speed[t] = speed;
    if (speed >= 1e-6) {
      hx = vx / speed;
      hy = vy / speed;
      k.heading_ever_defined = true;
    }
    k.heading_x[t] = hx;
    k.heading_y[t] = hy;
  }
  return k;
}

}  // namespace detail

/// Converts agent trajectories into the interaction features of the
/// subject: its speed v_<subject>, and per other O the Euclidean distance
/// d_<subject>_<O> and the signed angle theta_<subject>_<O> in (-pi, pi]
/// between the subject's heading and the bearing from subject to O
/// (positive counter-clockwise).
inline TimeSeriesDataset extract_features(const std::map<std::string, Trajectory>& trajectories,
                                          const InteractionSpec& spec,
                                          std::vector<std::string>* warnings = nullptr) {
  const auto subject_it = trajectories.find(spec.subject);
  if (subject_it == trajectories.end())
    throw Error("extract_features: unknown subject '" + spec.subject + "'");
  const Trajectory& subject = subject_it->second;
  if (subject.x.size() < 3 || subject.x.size() != subject.y.size())
    throw Error("extract_features: trajectory '" + spec.subject +
                "' needs >= 3 (x, y) samples");

  std::vector<const Trajectory*> others;
  for (const auto& name : spec.others) {
    if (name == spec.subject)
      throw Error("extract_features: subject listed among others");
    const auto it = trajectories.find(name);
    if (it == trajectories.end())
      throw Error("extract_features: unknown agent '" + name + "'");
    const Trajectory& o = it->second;
    if (o.x.size() != subject.x.size())
      throw Error("extract_features: trajectory '" + name + "' has " +
                  std::to_string(o.x.size()) + " samples, subject has " +
                  std::to_string(subject.x.size()));
    if (std::abs(o.dt - subject.dt) > 1e-9 * std::max(1.0, std::abs(subject.dt)))
      throw Error("extract_features: trajectory '" + name + "' has dt " +
                  std::to_string(o.dt) + ", subject has " + std::to_string(subject.dt));
    others.push_back(&o);
  }

  const std::size_t n = subject.x.size();
  const detail::Kinematics kin = detail::trajectory_kinematics(subject);
  if (!kin.heading_ever_defined && warnings && !others.empty())
    warnings->push_back("subject '" + spec.subject +
                        "' is stationary; theta uses the +x-axis default heading");

  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;
  names.push_back("v_" + spec.subject);
  columns.push_back(kin.speed);

  for (std::size_t oi = 0; oi < others.size(); ++oi) {
    const Trajectory& other = *others[oi];
    std::vector<double> dist(n), theta(n);
    double last_theta = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      const double bx = other.x[t] - subject.x[t];
      const double by = other.y[t] - subject.y[t];
      const double d = std::hypot(bx, by);
      dist[t] = d;
      if (d < 1e-12) {
        theta[t] = last_theta;  // coincident positions: bearing undefined
        continue;
      }
      const double hx = kin.heading_x[t];
      const double hy = kin.heading_y[t];
      theta[t] = std::atan2(hx * by - hy * bx, hx * bx + hy * by);
      last_theta = theta[t];
    }
    names.push_back("d_" + spec.subject + "_" + spec.others[oi]);
    columns.push_back(std::move(dist));
    names.push_back("theta_" + spec.subject + "_" + spec.others[oi]);
    columns.push_back(std::move(theta));
  }

  return TimeSeriesDataset(std::move(names), std::move(columns), subject.dt);
}

/// Loads trajectories from CSV. Two layouts: a per-agent file with header
/// "t,x,y" (the agent id is the file stem), or a combined file with header
/// "t,<id>_x,<id>_y,...". The time column must be uniformly spaced.
inline std::map<std::string, Trajectory> load_trajectories_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open file '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) throw Error(path + ": empty file");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  const std::vector<std::string> header = detail::split_csv_line(line);
  if (header.size() < 3 || header[0] != "t")
    throw Error(path + ": expected header 't,x,y' or 't,<id>_x,<id>_y,...'");

  std::vector<std::string> agent_ids;
  const bool single = header.size() == 3 && header[1] == "x" && header[2] == "y";
  if (single) {
    std::string stem = path;
    if (const auto slash = stem.find_last_of("/\\"); slash != std::string::npos)
      stem = stem.substr(slash + 1);
    if (const auto dot = stem.find_last_of('.'); dot != std::string::npos)
      stem = stem.substr(0, dot);
    agent_ids.push_back(stem);
  } else {
    if ((header.size() - 1) % 2 != 0)
      throw Error(path + ": combined layout needs an x,y column pair per agent");
    for (std::size_t j = 1; j < header.size(); j += 2) {
      const std::string& cx = header[j];
      const std::string& cy = header[j + 1];
      if (cx.size() < 3 || cx.substr(cx.size() - 2) != "_x" || cy.size() < 3 ||
          cy.substr(cy.size() - 2) != "_y" ||
          cx.substr(0, cx.size() - 2) != cy.substr(0, cy.size() - 2))
        throw Error(path + ": columns " + std::to_string(j + 1) + "," +
                    std::to_string(j + 2) + " must be '<id>_x,<id>_y', got '" + cx +
                    "','" + cy + "'");
      agent_ids.push_back(cx.substr(0, cx.size() - 2));
    }
  }

  std::vector<double> times;
  std::vector<std::vector<double>> coords(header.size() - 1);
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
    const std::vector<std::string> fields = detail::split_csv_line(line);
    if (fields.size() != header.size())
      throw Error(path + ": row " + std::to_string(row) + " has " +
                  std::to_string(fields.size()) + " fields, expected " +
                  std::to_string(header.size()));
    for (std::size_t j = 0; j < fields.size(); ++j) {
      double v = 0.0;
      if (fields[j].empty() || !detail::parse_double(fields[j], v) || !std::isfinite(v))
        throw Error(path + ": row " + std::to_string(row) + ", column " +
                    std::to_string(j + 1) + " ('" + header[j] + "'): bad value '" +
                    fields[j] + "'");
      if (j == 0)
        times.push_back(v);
      else
        coords[j - 1].push_back(v);
    }
  }

  if (times.size() < 3) throw Error(path + ": need at least 3 samples");
  const double dt = times[1] - times[0];
  if (dt <= 0.0) throw Error(path + ": time column must be strictly increasing");
  for (std::size_t i = 1; i + 1 < times.size(); ++i) {
    if (std::abs((times[i + 1] - times[i]) - dt) > 1e-6 * std::max(1.0, std::abs(dt)))
      throw Error(path + ": non-uniform sampling between rows " + std::to_string(i + 2) +
                  " and " + std::to_string(i + 3));
  }

  std::map<std::string, Trajectory> result;
  for (std::size_t a = 0; a < agent_ids.size(); ++a) {
    Trajectory t;
    t.agent_id = agent_ids[a];
    t.x = coords[2 * a];
    t.y = coords[2 * a + 1];
    t.dt = dt;
    if (result.count(t.agent_id))
      throw Error(path + ": duplicate agent id '" + t.agent_id + "'");
    result.emplace(t.agent_id, std::move(t));
  }
  return result;
}

}  // namespace tscausal
