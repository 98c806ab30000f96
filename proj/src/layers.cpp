#include "choreo/layers.hpp"

#include <cmath>

namespace choreo {

Linear Linear::zeros(int in, int out) {
    return {ad::parameter(Mat::Zero(in, out)), ad::parameter(Mat::Zero(1, out))};
}

Linear Linear::uniform(int in, int out, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Mat w(in, out);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = dist(rng);
    return {ad::parameter(std::move(w)), ad::parameter(Mat::Zero(1, out))};
}

void append(std::vector<NamedParam>& out, const std::string& name, const std::string& group, Linear& lin) {
    out.push_back({name + ".w", group, &lin.w});
    out.push_back({name + ".b", group, &lin.b});
}

}  // namespace choreo
