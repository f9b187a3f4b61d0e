#include "qnpg/mdp.hpp"

#include "qnpg/errors.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

namespace qnpg {

namespace {

constexpr double kStochasticTol = 1e-12;

[[noreturn]] void fail(const std::string& message) {
  throw std::invalid_argument(message);
}

}  // namespace

void TabularMdp::validate() const {
  if (num_states < 1) fail("num_states: must be a positive integer");
  if (num_actions < 1) fail("num_actions: must be a positive integer");
  if (transition.rows() != static_cast<long>(num_states) * num_actions ||
      transition.cols() != num_states) {
    fail("transition: expected shape (" + std::to_string(num_states) + "*" +
         std::to_string(num_actions) + ") x " + std::to_string(num_states));
  }
  if (reward.rows() != num_states || reward.cols() != num_actions) {
    fail("reward: expected shape " + std::to_string(num_states) + " x " +
         std::to_string(num_actions));
  }
  if (initial_dist.size() != num_states) {
    fail("initial_dist: expected length " + std::to_string(num_states));
  }
  if (!(discount > 0.0 && discount < 1.0)) {
    fail("discount: value " + std::to_string(discount) +
         " outside the open interval (0,1)");
  }
  for (int s = 0; s < num_states; ++s) {
    for (int a = 0; a < num_actions; ++a) {
      double row_sum = 0.0;
      for (int t = 0; t < num_states; ++t) {
        const double p = transition(row_index(s, a), t);
        if (!(p >= 0.0)) {
          fail("transition[" + std::to_string(s) + "][" + std::to_string(a) +
               "][" + std::to_string(t) + "]: negative probability");
        }
        row_sum += p;
      }
      if (std::abs(row_sum - 1.0) > kStochasticTol) {
        std::ostringstream os;
        os << "transition[" << s << "][" << a << "]: row sums to " << row_sum
           << ", expected 1 within " << kStochasticTol;
        fail(os.str());
      }
      const double r = reward(s, a);
      if (!(r >= 0.0 && r <= 1.0)) {
        fail("reward[" + std::to_string(s) + "][" + std::to_string(a) +
             "]: value " + std::to_string(r) + " outside [0,1]");
      }
    }
  }
  double rho_sum = 0.0;
  for (int s = 0; s < num_states; ++s) {
    if (!(initial_dist[s] >= 0.0)) {
      fail("initial_dist[" + std::to_string(s) + "]: negative probability");
    }
    rho_sum += initial_dist[s];
  }
  if (std::abs(rho_sum - 1.0) > kStochasticTol) {
    std::ostringstream os;
    os << "initial_dist: sums to " << rho_sum << ", expected 1 within "
       << kStochasticTol;
    fail(os.str());
  }
}

namespace {

TabularMdp mdp_from_json(const nlohmann::json& j, const std::string& origin) {
  auto require = [&](const char* field) -> const nlohmann::json& {
    if (!j.contains(field)) {
      fail(origin + ": missing field '" + std::string(field) + "'");
    }
    return j.at(field);
  };

  TabularMdp mdp;
  mdp.num_states = require("num_states").get<int>();
  mdp.num_actions = require("num_actions").get<int>();
  if (mdp.num_states < 1) fail(origin + ": num_states: must be positive");
  if (mdp.num_actions < 1) fail(origin + ": num_actions: must be positive");
  mdp.discount = require("discount").get<double>();

  const auto& trans = require("transition");
  if (!trans.is_array() || static_cast<int>(trans.size()) != mdp.num_states) {
    fail(origin + ": transition: expected " + std::to_string(mdp.num_states) +
         " state entries");
  }
  mdp.transition.resize(static_cast<long>(mdp.num_states) * mdp.num_actions,
                        mdp.num_states);
  for (int s = 0; s < mdp.num_states; ++s) {
    const auto& per_state = trans.at(s);
    if (!per_state.is_array() ||
        static_cast<int>(per_state.size()) != mdp.num_actions) {
      fail(origin + ": transition[" + std::to_string(s) + "]: expected " +
           std::to_string(mdp.num_actions) + " action entries");
    }
    for (int a = 0; a < mdp.num_actions; ++a) {
      const auto& row = per_state.at(a);
      if (!row.is_array() ||
          static_cast<int>(row.size()) != mdp.num_states) {
        fail(origin + ": transition[" + std::to_string(s) + "][" +
             std::to_string(a) + "]: expected " +
             std::to_string(mdp.num_states) + " probabilities");
      }
      for (int t = 0; t < mdp.num_states; ++t) {
        mdp.transition(mdp.row_index(s, a), t) = row.at(t).get<double>();
      }
    }
  }

  const auto& rew = require("reward");
  if (!rew.is_array() || static_cast<int>(rew.size()) != mdp.num_states) {
    fail(origin + ": reward: expected " + std::to_string(mdp.num_states) +
         " state entries");
  }
  mdp.reward.resize(mdp.num_states, mdp.num_actions);
  for (int s = 0; s < mdp.num_states; ++s) {
    const auto& row = rew.at(s);
    if (!row.is_array() ||
        static_cast<int>(row.size()) != mdp.num_actions) {
      fail(origin + ": reward[" + std::to_string(s) + "]: expected " +
           std::to_string(mdp.num_actions) + " values");
    }
    for (int a = 0; a < mdp.num_actions; ++a) {
      mdp.reward(s, a) = row.at(a).get<double>();
    }
  }

  const auto& rho = require("initial_dist");
  if (!rho.is_array() || static_cast<int>(rho.size()) != mdp.num_states) {
    fail(origin + ": initial_dist: expected " +
         std::to_string(mdp.num_states) + " probabilities");
  }
  mdp.initial_dist.resize(mdp.num_states);
  for (int s = 0; s < mdp.num_states; ++s) {
    mdp.initial_dist[s] = rho.at(s).get<double>();
  }

  mdp.validate();
  return mdp;
}

}  // namespace

TabularMdp mdp_from_json_text(const std::string& text,
                              const std::string& origin) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    fail(origin + ": JSON parse error: " + std::string(e.what()));
  }
  return mdp_from_json(j, origin);
}

TabularMdp load_mdp(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open MDP file: " + path);
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return mdp_from_json_text(buffer.str(), path);
}

}  // namespace qnpg
