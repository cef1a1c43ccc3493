#include "cvl/env/env_config.hpp"

#include <fstream>

#include "cvl/errors.hpp"

namespace cvl::env {

namespace {

std::vector<std::string> read_layout(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidSpec("cannot open gridworld layout: " + path);
    std::vector<std::string> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) rows.push_back(line);
    }
    return rows;
}

KeyValues builtin(const std::string& name) {
    KeyValues kv;
    kv.set("id", name);
    if (name == "chain") {
        kv.set("type", "chain");
        kv.set("n_actions", "2");
        kv.set("gamma", "0.9");
        kv.set("horizon", "10");
    } else if (name == "gridworld3x3") {
        kv.set("type", "gridworld");
        kv.set("width", "3");
        kv.set("height", "3");
        kv.set("goal_x", "2");
        kv.set("goal_y", "2");
        kv.set("slip_prob", "0");
        kv.set("gamma", "0.9");
        kv.set("horizon", "20");
    } else if (name == "gridworld5x5" || name == "gridworld5x5-transfer") {
        kv.set("type", "gridworld");
        kv.set("width", "5");
        kv.set("height", "5");
        kv.set("goal_x", "4");
        kv.set("goal_y", name == "gridworld5x5" ? "4" : "0");
        kv.set("slip_prob", "0.1");
        kv.set("gamma", "0.95");
        kv.set("horizon", "40");
    } else if (name == "mountain_car") {
        kv.set("type", "mountain_car");
    } else {
        return KeyValues::load(name);
    }
    return kv;
}

}  // namespace

std::unique_ptr<Environment> make_env(const std::string& name_or_path) {
    return make_env(builtin(name_or_path));
}

std::unique_ptr<Environment> make_env(const KeyValues& kv) {
    const std::string type = kv.get_string("type", "");
    if (type == "mountain_car") {
        return std::make_unique<MountainCarEnv>(static_cast<int>(kv.get_int("horizon", 999)),
                                                kv.get_double("goal_position", 0.45),
                                                kv.get_double("gamma", 0.99));
    }
    const double gamma = kv.get_double("gamma", 0.9);
    const int horizon = static_cast<int>(kv.get_int("horizon", 40));
    if (type == "chain") {
        return std::make_unique<TabularEnv>(kv.get_string("id", "chain"),
                                            make_chain(static_cast<int>(kv.get_int("n_actions", 1)), gamma, horizon));
    }
    if (type == "gridworld") {
        const double step_reward = kv.get_double("step_reward", 0.0);
        const double goal_reward = kv.get_double("goal_reward", 1.0);
        const double slip = kv.get_double("slip_prob", 0.0);
        if (auto layout = kv.get("layout")) {
            return std::make_unique<TabularEnv>(
                kv.get_string("id", "gridworld"),
                make_gridworld_from_ascii(read_layout(*layout), step_reward, goal_reward, slip, gamma, horizon));
        }
        const int width = static_cast<int>(kv.get_int("width", 5));
        const int height = static_cast<int>(kv.get_int("height", 5));
        const Cell goal{static_cast<int>(kv.get_int("goal_x", width - 1)),
                        static_cast<int>(kv.get_int("goal_y", height - 1))};
        return std::make_unique<TabularEnv>(
            kv.get_string("id", "gridworld"),
            make_gridworld(width, height, goal, step_reward, goal_reward, slip, gamma, horizon));
    }
    throw InvalidSpec("unknown environment type: '" + type + "'");
}

}  // namespace cvl::env
