#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "celltune/rng.hpp"

namespace celltune {

// Exploration rate with multiplicative decay: eps <- max(eps * d, eps_min).
struct EpsilonSchedule {
    double epsilon = 1.0;
    double decay = 0.99;
    double floor = 0.01;

    void validate() const {
        if (epsilon < floor || epsilon > 1.0 || floor < 0.0 || decay <= 0.0 || decay > 1.0)
            throw std::invalid_argument("EpsilonSchedule: need floor <= epsilon <= 1, 0 < decay <= 1");
    }

    void step() { epsilon = std::max(epsilon * decay, floor); }

    static EpsilonSchedule greedy(double eps_min) { return {eps_min, 1.0, eps_min}; }
};

inline int argmax_lowest(std::span<const double> row) {
    int best = 0;
    for (int i = 1; i < static_cast<int>(row.size()); ++i)
        if (row[static_cast<std::size_t>(i)] > row[static_cast<std::size_t>(best)]) best = i;
    return best;
}

// Epsilon-greedy action choice. The schedule decays once per call before the
// draw; ties in exploitation break toward the lowest action id.
inline int select_action(std::span<const double> q_values_for_state, EpsilonSchedule& schedule,
                         RngStream& rng) {
    if (q_values_for_state.empty())
        throw std::invalid_argument("select_action: empty Q-value row");
    schedule.step();
    if (rng.uniform() < schedule.epsilon)
        return static_cast<int>(rng.uniform_index(q_values_for_state.size()));
    return argmax_lowest(q_values_for_state);
}

// Tabular state-action value function, zero-initialized.
class QTable {
  public:
    QTable(int n_states, int n_actions, double learning_rate, double discount)
        : m_(n_states), n_(n_actions), alpha_(learning_rate), gamma_(discount),
          values_(static_cast<std::size_t>(n_states) * static_cast<std::size_t>(n_actions), 0.0) {
        if (m_ < 1 || n_ < 1) throw std::invalid_argument("QTable: empty table");
        if (!(alpha_ > 0.0 && alpha_ < 1.0)) throw std::invalid_argument("QTable: alpha in (0,1)");
        if (!(gamma_ >= 0.0 && gamma_ < 1.0)) throw std::invalid_argument("QTable: gamma in [0,1)");
    }

    double& at(int s, int a) { return values_[index(s, a)]; }
    double at(int s, int a) const { return values_[index(s, a)]; }

    std::span<const double> row(int s) const {
        return std::span<const double>(values_).subspan(index(s, 0), static_cast<std::size_t>(n_));
    }

    double row_max(int s) const {
        const auto r = row(s);
        return *std::max_element(r.begin(), r.end());
    }

    int n_states() const { return m_; }
    int n_actions() const { return n_; }
    double learning_rate() const { return alpha_; }
    double discount() const { return gamma_; }

    void save_csv(const std::string& path, long long seed = 0) const {
        std::ofstream out(path);
        if (!out) throw std::runtime_error("QTable: cannot write " + path);
        out << "# celltune-qtable v1 states=" << m_ << " actions=" << n_
            << " alpha=" << format_double(alpha_) << " gamma=" << format_double(gamma_)
            << " seed=" << seed << "\n";
        for (int s = 0; s < m_; ++s) {
            for (int a = 0; a < n_; ++a) out << (a ? "," : "") << format_double(at(s, a));
            out << "\n";
        }
    }

    static QTable load_csv(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("QTable: cannot read " + path);
        std::string header;
        std::getline(in, header);
        int m = 0, n = 0;
        long long seed = 0;
        double alpha = 0.0, gamma = 0.0;
        if (std::sscanf(header.c_str(),
                        "# celltune-qtable v1 states=%d actions=%d alpha=%lf gamma=%lf seed=%lld",
                        &m, &n, &alpha, &gamma, &seed) < 4)
            throw std::runtime_error("QTable: bad checkpoint header in " + path);
        QTable t(m, n, alpha, gamma);
        for (int s = 0; s < m; ++s) {
            std::string line;
            if (!std::getline(in, line)) throw std::runtime_error("QTable: truncated " + path);
            std::stringstream ss(line);
            std::string cell;
            for (int a = 0; a < n; ++a) {
                if (!std::getline(ss, cell, ',')) throw std::runtime_error("QTable: short row");
                t.at(s, a) = std::stod(cell);
            }
        }
        return t;
    }

    static std::string format_double(double v) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return buf;
    }

  private:
    std::size_t index(int s, int a) const {
        if (s < 0 || s >= m_ || a < 0 || a >= n_)
            throw std::out_of_range("QTable: index out of range");
        return static_cast<std::size_t>(s) * static_cast<std::size_t>(n_) +
               static_cast<std::size_t>(a);
    }

    int m_, n_;
    double alpha_, gamma_;
    std::vector<double> values_;
};

// One Bellman backup: Q(s,a) <- (1-a) Q(s,a) + a [r + g max_a' Q(s',a')].
inline void tabular_update(QTable& table, int s, int a, double reward, int s_next) {
    const double alpha = table.learning_rate();
    const double gamma = table.discount();
    table.at(s, a) =
        (1.0 - alpha) * table.at(s, a) + alpha * (reward + gamma * table.row_max(s_next));
}

// Backup for a transition that ends the episode: no future to bootstrap.
inline void tabular_update_terminal(QTable& table, int s, int a, double reward) {
    const double alpha = table.learning_rate();
    table.at(s, a) = (1.0 - alpha) * table.at(s, a) + alpha * reward;
}

struct Experience {
    int state = 0;
    int action = 0;
    double reward = 0.0;
    int next_state = 0;
    bool terminal = false;
};

// Fixed-capacity ring buffer with uniform sampling.
class ReplayMemory {
  public:
    ReplayMemory(std::size_t capacity, std::size_t batch_size)
        : capacity_(capacity), batch_size_(batch_size) {
        if (capacity_ <= batch_size_)
            throw std::invalid_argument("ReplayMemory: capacity must exceed batch size");
        buffer_.reserve(capacity_);
    }

    void push(const Experience& e) {
        if (buffer_.size() < capacity_) {
            buffer_.push_back(e);
        } else {
            buffer_[write_] = e;
        }
        write_ = (write_ + 1) % capacity_;
    }

    std::size_t size() const { return buffer_.size(); }
    std::size_t batch_size() const { return batch_size_; }
    std::size_t capacity() const { return capacity_; }

    const Experience& sample(RngStream& rng) const {
        if (buffer_.empty()) throw std::logic_error("ReplayMemory: sampling from empty buffer");
        return buffer_[rng.uniform_index(buffer_.size())];
    }

  private:
    std::size_t capacity_;
    std::size_t batch_size_;
    std::size_t write_ = 0;
    std::vector<Experience> buffer_;
};

// Fully connected Q-network: one-hot state in, Q-value per action out, two
// ReLU hidden layers of equal width. Parameters live in one flat vector
// (layout W1|b1|W2|b2|W3|b3, row-major) shared by the adaptive-moments state.
class DqnModel {
  public:
    DqnModel(int n_inputs, int n_hidden, int n_outputs, double step_size, double discount)
        : in_(n_inputs), hid_(n_hidden), out_(n_outputs), eta_(step_size), gamma_(discount) {
        if (in_ < 1 || hid_ < 1 || out_ < 1) throw std::invalid_argument("DqnModel: bad shape");
        params_.assign(param_count(), 0.0);
        adam_m_.assign(param_count(), 0.0);
        adam_v_.assign(param_count(), 0.0);
    }

    std::size_t param_count() const {
        return static_cast<std::size_t>(hid_ * in_ + hid_ + hid_ * hid_ + hid_ + out_ * hid_ + out_);
    }

    void init_weights(RngStream& rng) {
        auto glorot = [&](std::size_t off, int rows, int cols) {
            const double lim = std::sqrt(6.0 / static_cast<double>(rows + cols));
            for (int i = 0; i < rows * cols; ++i)
                params_[off + static_cast<std::size_t>(i)] = rng.uniform(-lim, lim);
        };
        glorot(off_w1(), hid_, in_);
        glorot(off_w2(), hid_, hid_);
        glorot(off_w3(), out_, hid_);
        std::fill(params_.begin() + static_cast<long>(off_b1()),
                  params_.begin() + static_cast<long>(off_b1()) + hid_, 0.0);
        std::fill(params_.begin() + static_cast<long>(off_b2()),
                  params_.begin() + static_cast<long>(off_b2()) + hid_, 0.0);
        std::fill(params_.begin() + static_cast<long>(off_b3()),
                  params_.begin() + static_cast<long>(off_b3()) + out_, 0.0);
        adam_m_.assign(param_count(), 0.0);
        adam_v_.assign(param_count(), 0.0);
        adam_t_ = 0;
    }

    std::vector<double> forward(std::span<const double> input) const {
        if (static_cast<int>(input.size()) != in_)
            throw std::invalid_argument("DqnModel: input size mismatch");
        std::vector<double> h1(static_cast<std::size_t>(hid_)), h2(static_cast<std::size_t>(hid_));
        std::vector<double> q(static_cast<std::size_t>(out_));
        forward_into(input, h1, h2, q);
        return q;
    }

    std::vector<double> forward_state(int state_index) const {
        std::vector<double> x(static_cast<std::size_t>(in_), 0.0);
        x.at(static_cast<std::size_t>(state_index)) = 1.0;
        return forward(x);
    }

    double max_q(int state_index) const {
        const auto q = forward_state(state_index);
        return *std::max_element(q.begin(), q.end());
    }

    struct Batch {
        std::vector<int> states;  // one-hot index per sample
        std::vector<int> actions;
        std::vector<double> targets;
    };

    // Mean squared error over the batch, gradient flowing only through the
    // predicted Q(s_j, a_j). Returns the loss; fills grad (same layout as
    // the parameter vector) when non-null.
    double loss_and_gradient(const Batch& batch, std::vector<double>* grad) const {
        const std::size_t B = batch.states.size();
        if (B == 0 || batch.actions.size() != B || batch.targets.size() != B)
            throw std::invalid_argument("DqnModel: malformed batch");
        if (grad) grad->assign(param_count(), 0.0);

        std::vector<double> h1(static_cast<std::size_t>(hid_)), h2(static_cast<std::size_t>(hid_));
        std::vector<double> q(static_cast<std::size_t>(out_));
        std::vector<double> x(static_cast<std::size_t>(in_), 0.0);
        std::vector<double> d2(static_cast<std::size_t>(hid_)), d1(static_cast<std::size_t>(hid_));

        double loss = 0.0;
        for (std::size_t j = 0; j < B; ++j) {
            const int sidx = batch.states[j];
            const int a = batch.actions[j];
            if (sidx < 0 || sidx >= in_ || a < 0 || a >= out_)
                throw std::invalid_argument("DqnModel: batch index out of range");
            std::fill(x.begin(), x.end(), 0.0);
            x[static_cast<std::size_t>(sidx)] = 1.0;
            forward_into(x, h1, h2, q);
            const double err = q[static_cast<std::size_t>(a)] - batch.targets[j];
            loss += err * err;
            if (!grad) continue;

            const double dq = 2.0 * err / static_cast<double>(B);
            // output layer
            for (int k = 0; k < hid_; ++k)
                (*grad)[off_w3() + w3_idx(a, k)] += dq * h2[static_cast<std::size_t>(k)];
            (*grad)[off_b3() + static_cast<std::size_t>(a)] += dq;
            // back through hidden 2
            for (int k = 0; k < hid_; ++k) {
                const double up = dq * params_[off_w3() + w3_idx(a, k)];
                d2[static_cast<std::size_t>(k)] = h2[static_cast<std::size_t>(k)] > 0.0 ? up : 0.0;
            }
            for (int k = 0; k < hid_; ++k) {
                if (d2[static_cast<std::size_t>(k)] == 0.0) continue;
                for (int l = 0; l < hid_; ++l)
                    (*grad)[off_w2() + w2_idx(k, l)] +=
                        d2[static_cast<std::size_t>(k)] * h1[static_cast<std::size_t>(l)];
                (*grad)[off_b2() + static_cast<std::size_t>(k)] += d2[static_cast<std::size_t>(k)];
            }
            // back through hidden 1; input is one-hot so only column sidx moves
            for (int l = 0; l < hid_; ++l) {
                double up = 0.0;
                for (int k = 0; k < hid_; ++k)
                    up += d2[static_cast<std::size_t>(k)] * params_[off_w2() + w2_idx(k, l)];
                d1[static_cast<std::size_t>(l)] = h1[static_cast<std::size_t>(l)] > 0.0 ? up : 0.0;
            }
            for (int l = 0; l < hid_; ++l) {
                if (d1[static_cast<std::size_t>(l)] == 0.0) continue;
                (*grad)[off_w1() + w1_idx(l, sidx)] += d1[static_cast<std::size_t>(l)];
                (*grad)[off_b1() + static_cast<std::size_t>(l)] += d1[static_cast<std::size_t>(l)];
            }
        }
        return loss / static_cast<double>(B);
    }

    void adam_step(const std::vector<double>& grad) {
        if (grad.size() != param_count()) throw std::invalid_argument("DqnModel: gradient size");
        ++adam_t_;
        const double b1c = 1.0 - std::pow(beta1_, static_cast<double>(adam_t_));
        const double b2c = 1.0 - std::pow(beta2_, static_cast<double>(adam_t_));
        for (std::size_t i = 0; i < grad.size(); ++i) {
            adam_m_[i] = beta1_ * adam_m_[i] + (1.0 - beta1_) * grad[i];
            adam_v_[i] = beta2_ * adam_v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
            const double mhat = adam_m_[i] / b1c;
            const double vhat = adam_v_[i] / b2c;
            params_[i] -= eta_ * mhat / (std::sqrt(vhat) + adam_eps_);
        }
        for (double p : params_)
            if (!std::isfinite(p)) throw std::runtime_error("DqnModel: non-finite weight after update");
    }

    // One training step: targets come from the weights frozen at entry, then
    // a single adaptive-moments update on the batch MSE. Returns the loss.
    double train_step(const ReplayMemory& memory, RngStream& rng) {
        if (memory.size() < memory.batch_size())
            throw std::logic_error("DqnModel: replay memory below batch size");
        const DqnModel snapshot(*this);
        Batch batch;
        const std::size_t B = memory.batch_size();
        batch.states.reserve(B);
        batch.actions.reserve(B);
        batch.targets.reserve(B);
        for (std::size_t j = 0; j < B; ++j) {
            const Experience& e = memory.sample(rng);
            batch.states.push_back(e.state);
            batch.actions.push_back(e.action);
            const double y =
                e.terminal ? e.reward : e.reward + gamma_ * snapshot.max_q(e.next_state);
            batch.targets.push_back(y);
        }
        std::vector<double> grad;
        const double loss = loss_and_gradient(batch, &grad);
        adam_step(grad);
        return loss;
    }

    std::vector<double>& parameters() { return params_; }
    const std::vector<double>& parameters() const { return params_; }

    int n_inputs() const { return in_; }
    int n_hidden() const { return hid_; }
    int n_outputs() const { return out_; }
    double step_size() const { return eta_; }
    double discount() const { return gamma_; }
    void set_step_size(double eta) { eta_ = eta; }

    void set_moment_constants(double beta1, double beta2, double eps) {
        if (!(beta1 > 0.0 && beta1 < 1.0 && beta2 > 0.0 && beta2 < 1.0 && eps > 0.0))
            throw std::invalid_argument("DqnModel: bad adaptive-moments constants");
        beta1_ = beta1;
        beta2_ = beta2;
        adam_eps_ = eps;
    }

    void save(const std::string& path, long long seed = 0) const {
        std::ofstream outf(path);
        if (!outf) throw std::runtime_error("DqnModel: cannot write " + path);
        outf << "celltune-dqn v1\n";
        outf << in_ << " " << hid_ << " " << out_ << " " << seed << "\n";
        outf << QTable::format_double(eta_) << " " << QTable::format_double(gamma_) << " "
             << adam_t_ << "\n";
        for (double p : params_) outf << QTable::format_double(p) << "\n";
    }

    static DqnModel load(const std::string& path) {
        std::ifstream inf(path);
        if (!inf) throw std::runtime_error("DqnModel: cannot read " + path);
        std::string magic;
        std::getline(inf, magic);
        if (magic != "celltune-dqn v1")
            throw std::runtime_error("DqnModel: bad checkpoint magic in " + path);
        int i = 0, h = 0, o = 0;
        long long seed = 0;
        long t = 0;
        double eta = 0.0, gamma = 0.0;
        inf >> i >> h >> o >> seed >> eta >> gamma >> t;
        DqnModel model(i, h, o, eta, gamma);
        model.adam_t_ = t;
        for (auto& p : model.params_)
            if (!(inf >> p)) throw std::runtime_error("DqnModel: truncated checkpoint " + path);
        return model;
    }

  private:
    void forward_into(std::span<const double> x, std::vector<double>& h1, std::vector<double>& h2,
                      std::vector<double>& q) const {
        for (int k = 0; k < hid_; ++k) {
            double acc = params_[off_b1() + static_cast<std::size_t>(k)];
            for (int l = 0; l < in_; ++l)
                acc += params_[off_w1() + w1_idx(k, l)] * x[static_cast<std::size_t>(l)];
            h1[static_cast<std::size_t>(k)] = acc > 0.0 ? acc : 0.0;
        }
        for (int k = 0; k < hid_; ++k) {
            double acc = params_[off_b2() + static_cast<std::size_t>(k)];
            for (int l = 0; l < hid_; ++l)
                acc += params_[off_w2() + w2_idx(k, l)] * h1[static_cast<std::size_t>(l)];
            h2[static_cast<std::size_t>(k)] = acc > 0.0 ? acc : 0.0;
        }
        for (int k = 0; k < out_; ++k) {
            double acc = params_[off_b3() + static_cast<std::size_t>(k)];
            for (int l = 0; l < hid_; ++l)
                acc += params_[off_w3() + w3_idx(k, l)] * h2[static_cast<std::size_t>(l)];
            q[static_cast<std::size_t>(k)] = acc;
        }
    }

    std::size_t off_w1() const { return 0; }
    std::size_t off_b1() const { return static_cast<std::size_t>(hid_ * in_); }
    std::size_t off_w2() const { return off_b1() + static_cast<std::size_t>(hid_); }
    std::size_t off_b2() const { return off_w2() + static_cast<std::size_t>(hid_ * hid_); }
    std::size_t off_w3() const { return off_b2() + static_cast<std::size_t>(hid_); }
    std::size_t off_b3() const { return off_w3() + static_cast<std::size_t>(out_ * hid_); }
    std::size_t w1_idx(int row, int col) const {
        return static_cast<std::size_t>(row * in_ + col);
    }
    std::size_t w2_idx(int row, int col) const {
        return static_cast<std::size_t>(row * hid_ + col);
    }
    std::size_t w3_idx(int row, int col) const {
        return static_cast<std::size_t>(row * hid_ + col);
    }

    int in_, hid_, out_;
    double eta_;
    double gamma_;
    double beta1_ = 0.9;
    double beta2_ = 0.999;
    double adam_eps_ = 1e-8;
    long adam_t_ = 0;
    std::vector<double> params_;
    std::vector<double> adam_m_;
    std::vector<double> adam_v_;
};

}  // namespace celltune
