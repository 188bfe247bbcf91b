#include "plis/koopman.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <fstream>
#include <sstream>

namespace plis {

namespace {

constexpr double kSvdTruncation = 1e-10;

std::vector<std::pair<int, int>> delay_layout(int n, int n_k) {
    std::vector<std::pair<int, int>> delays;
    int depth = 1;
    while (static_cast<int>(delays.size()) < n_k - n) {
        for (int s = n - 1; s >= 0 && static_cast<int>(delays.size()) < n_k - n; --s) {
            delays.emplace_back(s, depth);
        }
        ++depth;
    }
    return delays;
}

}  // namespace

int KoopmanModel::max_delay() const {
    int longest = 0;
    for (const auto& [state, delay] : delays) longest = std::max(longest, delay);
    return longest;
}

Vector KoopmanModel::lift(const std::vector<Vector>& window) const {
    if (window.empty()) throw ConstructionError("lift requires a non-empty state window");
    Vector z(n_k);
    const auto last = window.size() - 1;
    z.head(n) = window[last];
    for (std::size_t c = 0; c < delays.size(); ++c) {
        const auto [state, delay] = delays[c];
        const auto idx = last >= static_cast<std::size_t>(delay)
                             ? last - static_cast<std::size_t>(delay)
                             : 0;  // pad by holding the oldest sample
        z(n + static_cast<Eigen::Index>(c)) = window[idx](state);
    }
    return z;
}

Vector KoopmanModel::unlift(const Vector& lifted) const {
    return lifted.head(n);
}

KoopmanModel dmd_fit(const std::vector<SnapshotSequence>& sequences, int n_k, double step) {
    if (sequences.empty() || sequences.front().empty()) {
        throw FitError("dmd_fit requires at least one non-empty sequence");
    }
    const int n = static_cast<int>(sequences.front().front().first.size());
    const int m = static_cast<int>(sequences.front().front().second.size());
    if (n_k < n) throw FitError("lifted dimension must be at least the state dimension");

    KoopmanModel model;
    model.n = n;
    model.n_k = n_k;
    model.m = m;
    model.step = step;
    model.delays = delay_layout(n, n_k);
    const int history = model.max_delay();

    // Count usable snapshot pairs.
    long pairs = 0;
    for (const auto& seq : sequences) {
        const long usable = static_cast<long>(seq.size()) - history - 1;
        if (usable > 0) pairs += usable;
    }
    if (pairs < 10L * n_k) {
        std::ostringstream msg;
        msg << "dmd_fit: " << pairs << " snapshot pairs available, need at least "
            << 10L * n_k;
        throw FitError(msg.str());
    }

    Matrix X(n_k, pairs);
    Matrix Xp(n_k, pairs);
    Matrix U(m, pairs);
    long col = 0;
    std::vector<Vector> window;
    for (const auto& seq : sequences) {
        if (static_cast<long>(seq.size()) < history + 2) continue;
        for (std::size_t k = static_cast<std::size_t>(history); k + 1 < seq.size(); ++k) {
            window.clear();
            for (std::size_t j = k - static_cast<std::size_t>(history); j <= k + 1; ++j) {
                window.push_back(seq[j].first);
            }
            // window holds samples k-history .. k+1
            std::vector<Vector> now(window.begin(), window.end() - 1);
            X.col(col) = model.lift(now);
            Xp.col(col) = model.lift(window);
            U.col(col) = seq[k].second;
            ++col;
        }
    }

    Matrix G(n_k + m, pairs);
    G.topRows(n_k) = X;
    G.bottomRows(m) = U;

    Eigen::BDCSVD<Matrix> svd(G, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sigma = svd.singularValues();
    const double cutoff = kSvdTruncation * sigma(0);
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < sigma.size(); ++i) {
        if (sigma(i) > cutoff) ++rank;
    }
    model.truncated_singular_values = static_cast<int>(sigma.size() - rank);

    const Matrix Ut = svd.matrixU().leftCols(rank);
    const Matrix Vt = svd.matrixV().leftCols(rank);
    const Vector inv_sigma = sigma.head(rank).cwiseInverse();
    // [A_k B_k] = Xp V S^-1 U'
    const Matrix AB = Xp * (Vt * inv_sigma.asDiagonal() * Ut.transpose());
    model.A_k = AB.leftCols(n_k);
    model.B_k = AB.rightCols(m);

    const double denom = Xp.norm();
    model.fit_error =
        denom > 0.0 ? (Xp - model.A_k * X - model.B_k * U).norm() / denom : 0.0;
    return model;
}

void save_koopman(const KoopmanModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path + " for writing");
    out.precision(17);
    out << "koopman " << model.n << " " << model.n_k << " " << model.m << " "
        << model.step << " " << model.fit_error << " "
        << model.truncated_singular_values << "\n";
    for (const auto& [state, delay] : model.delays) out << state << " " << delay << "\n";
    auto dump = [&out](const Matrix& mat) {
        for (Eigen::Index i = 0; i < mat.rows(); ++i) {
            for (Eigen::Index j = 0; j < mat.cols(); ++j) {
                out << mat(i, j) << (j + 1 < mat.cols() ? ' ' : '\n');
            }
        }
    };
    dump(model.A_k);
    dump(model.B_k);
}

KoopmanModel load_koopman(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    std::string tag;
    KoopmanModel model;
    in >> tag >> model.n >> model.n_k >> model.m >> model.step >> model.fit_error >>
        model.truncated_singular_values;
    if (tag != "koopman" || !in) throw Error(path + ": not a koopman model file");
    model.delays.resize(static_cast<std::size_t>(model.n_k - model.n));
    for (auto& [state, delay] : model.delays) in >> state >> delay;
    auto slurp = [&in](Matrix& mat, int rows, int cols) {
        mat.resize(rows, cols);
        for (int i = 0; i < rows; ++i) {
            for (int j = 0; j < cols; ++j) in >> mat(i, j);
        }
    };
    slurp(model.A_k, model.n_k, model.n_k);
    slurp(model.B_k, model.n_k, model.m);
    if (!in) throw Error(path + ": truncated koopman model file");
    return model;
}

}  // namespace plis
