#include "avf/repr.hpp"

#include <cmath>
#include <string>

#include "avf/rng.hpp"

namespace avf {

namespace {

// centered uniform scaled by 1/sqrt(fan_in)
void init_uniform(Mat& w, int fan_in, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (int i = 0; i < w.rows(); ++i)
        for (int j = 0; j < w.cols(); ++j)
            w(i, j) = rng.uniform(-bound, bound);
}

} // namespace

struct TwoPartNet::Grads {
    Mat w1, w2, w3;
    Eigen::RowVectorXd b1, b2, b3;
};

TwoPartNet::TwoPartNet(int n_states, int d, int n_tasks, const TwoPartNetConfig& cfg)
    : n_(n_states), h_(cfg.hidden), d_(d), k_(n_tasks), cfg_(cfg) {
    if (n_ < 1 || h_ < 1 || d_ < 1 || k_ < 1)
        throw std::invalid_argument("TwoPartNet: all dimensions must be positive");
    Rng rng(cfg.seed);
    w1_.resize(n_, h_);
    w2_.resize(h_, d_);
    w3_.resize(d_, k_);
    init_uniform(w1_, n_, rng);
    init_uniform(w2_, h_, rng);
    init_uniform(w3_, d_ + 1, rng); // heads see the bias unit as an extra input
    b1_ = Eigen::RowVectorXd::Zero(h_);
    b2_ = Eigen::RowVectorXd::Zero(d_);
    b3_ = Eigen::RowVectorXd::Zero(k_);
    m1_ = Mat::Zero(n_, h_);
    m2_ = Mat::Zero(h_, d_);
    m3_ = Mat::Zero(d_, k_);
    mb1_ = Eigen::RowVectorXd::Zero(h_);
    mb2_ = Eigen::RowVectorXd::Zero(d_);
    mb3_ = Eigen::RowVectorXd::Zero(k_);
}

Mat TwoPartNet::features() const {
    // one-hot inputs make the first layer a row lookup
    Mat h1 = (w1_.rowwise() + b1_).cwiseMax(0.0);
    Mat z2 = (h1 * w2_).rowwise() + b2_;
    return z2.cwiseMax(0.0);
}

Mat TwoPartNet::predictions() const {
    return (features() * w3_).rowwise() + b3_;
}

TwoPartNet::Grads TwoPartNet::backward(const Mat& targets_nk, const std::vector<int>& states,
                                       const std::vector<int>& tasks, double* loss_out) const {
    const int batch = static_cast<int>(states.size());
    Grads g;
    g.w1 = Mat::Zero(n_, h_);
    g.w2 = Mat::Zero(h_, d_);
    g.w3 = Mat::Zero(d_, k_);
    g.b1 = Eigen::RowVectorXd::Zero(h_);
    g.b2 = Eigen::RowVectorXd::Zero(d_);
    g.b3 = Eigen::RowVectorXd::Zero(k_);

    double loss = 0.0;
    for (int s = 0; s < batch; ++s) {
        const int x = states[s];
        const int i = tasks[s];
        const Eigen::RowVectorXd z1 = w1_.row(x) + b1_;
        const Eigen::RowVectorXd h1 = z1.cwiseMax(0.0);
        const Eigen::RowVectorXd z2 = h1 * w2_ + b2_;
        const Eigen::RowVectorXd h2 = z2.cwiseMax(0.0);
        const double y = h2.dot(w3_.col(i)) + b3_[i];
        const double err = y - targets_nk(x, i);
        loss += err * err;

        const double gy = 2.0 * err / batch;
        g.w3.col(i).noalias() += gy * h2.transpose();
        g.b3[i] += gy;
        Eigen::RowVectorXd dz2 =
            (gy * w3_.col(i).transpose().array() * (z2.array() > 0.0).cast<double>()).matrix();
        g.w2.noalias() += h1.transpose() * dz2;
        g.b2 += dz2;
        Eigen::RowVectorXd dz1 =
            ((dz2 * w2_.transpose()).array() * (z1.array() > 0.0).cast<double>()).matrix();
        g.w1.row(x) += dz1;
        g.b1 += dz1;
    }
    if (loss_out)
        *loss_out = loss / batch;
    return g;
}

void TwoPartNet::rmsprop_apply(const Grads& g) {
    const double decay = cfg_.rms_decay;
    const double eps = cfg_.rms_epsilon;
    const double lr = cfg_.learning_rate;
    auto step = [&](auto& w, auto& m, const auto& grad) {
        m.array() = decay * m.array() + (1.0 - decay) * grad.array().square();
        w.array() -= lr * grad.array() / (m.array().sqrt() + eps);
    };
    step(w1_, m1_, g.w1);
    step(b1_, mb1_, g.b1);
    step(w2_, m2_, g.w2);
    step(b2_, mb2_, g.b2);
    step(w3_, m3_, g.w3);
    step(b3_, mb3_, g.b3);
}

double TwoPartNet::train_step(const Mat& targets_nk, const std::vector<int>& states,
                              const std::vector<int>& tasks) {
    double loss = 0.0;
    const Grads g = backward(targets_nk, states, tasks, &loss);
    if (!std::isfinite(loss) || loss > cfg_.divergence_cutoff)
        throw std::runtime_error("TwoPartNet: training diverged, minibatch loss = " +
                                 std::to_string(loss));
    rmsprop_apply(g);
    return loss;
}

double TwoPartNet::full_loss(const Mat& targets_nk) const {
    const Mat err = predictions() - targets_nk;
    return err.squaredNorm() / (static_cast<double>(n_) * k_);
}

Vec TwoPartNet::parameter_vector() const {
    Vec theta(w1_.size() + b1_.size() + w2_.size() + b2_.size() + w3_.size() + b3_.size());
    int off = 0;
    auto put = [&](const auto& m) {
        for (int j = 0; j < m.cols(); ++j)
            for (int i = 0; i < m.rows(); ++i)
                theta[off++] = m(i, j);
    };
    put(w1_); put(b1_); put(w2_); put(b2_); put(w3_); put(b3_);
    return theta;
}

void TwoPartNet::set_parameter_vector(const Vec& theta) {
    int off = 0;
    auto take = [&](auto& m) {
        for (int j = 0; j < m.cols(); ++j)
            for (int i = 0; i < m.rows(); ++i)
                m(i, j) = theta[off++];
    };
    take(w1_); take(b1_); take(w2_); take(b2_); take(w3_); take(b3_);
    if (off != theta.size())
        throw std::invalid_argument("set_parameter_vector: length mismatch");
}

Vec TwoPartNet::full_loss_gradient(const Mat& targets_nk) const {
    // all (state, task) pairs as one batch; scaling matches full_loss
    std::vector<int> states, tasks;
    states.reserve(static_cast<size_t>(n_) * k_);
    tasks.reserve(static_cast<size_t>(n_) * k_);
    for (int x = 0; x < n_; ++x)
        for (int i = 0; i < k_; ++i) {
            states.push_back(x);
            tasks.push_back(i);
        }
    const Grads g = backward(targets_nk, states, tasks, nullptr);
    Vec flat(w1_.size() + b1_.size() + w2_.size() + b2_.size() + w3_.size() + b3_.size());
    int off = 0;
    auto put = [&](const auto& m) {
        for (int j = 0; j < m.cols(); ++j)
            for (int i = 0; i < m.rows(); ++i)
                flat[off++] = m(i, j);
    };
    put(g.w1); put(g.b1); put(g.w2); put(g.b2); put(g.w3); put(g.b3);
    return flat;
}

std::pair<TwoPartNet, Representation> train_two_part(const ValueTargetSet& targets, int d,
                                                     const TwoPartNetConfig& cfg) {
    if (targets.targets.empty())
        throw std::invalid_argument("train_two_part: empty target set");
    const Mat t = targets.as_matrix();
    const int n = static_cast<int>(t.rows());
    const int k = static_cast<int>(t.cols());

    TwoPartNet net(n, d, k, cfg);
    Rng rng(Rng::stream_seed(cfg.seed, 0x7261696e)); // sampling stream, separate from init
    std::vector<int> states(cfg.batch), tasks(cfg.batch);
    for (int u = 0; u < cfg.updates; ++u) {
        for (int s = 0; s < cfg.batch; ++s) {
            states[s] = rng.index(n);
            tasks[s] = rng.index(k);
        }
        net.train_step(t, states, tasks);
        if (cfg.log_every > 0 && (u + 1) % cfg.log_every == 0)
            net.loss_log_.emplace_back(u + 1, net.full_loss(t));
    }

    Representation phi;
    phi.features = net.features();
    phi.has_bias = true;
    return {std::move(net), std::move(phi)};
}

} // namespace avf
