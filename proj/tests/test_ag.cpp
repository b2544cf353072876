#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <functional>
#include <vector>

#include "recon3d/ag/adam.hpp"
#include "recon3d/ag/ops.hpp"

using namespace recon3d;
using ag::Graph;
using ag::GradBuffer;
using ag::ParamStore;
using ag::Var;
using Md = ag::Mat<double>;

namespace {

Md random_mat(Rng& rng, Eigen::Index r, Eigen::Index c, double scale = 1.0) {
    Md m(r, c);
    for (Eigen::Index j = 0; j < c; ++j)
        for (Eigen::Index i = 0; i < r; ++i) m(i, j) = rng.normal(0.0, scale);
    return m;
}

// Compares analytic input gradients against central finite differences for
// a scalar-valued function of several matrix inputs.
void check_gradients(const std::vector<Md>& inputs,
                     const std::function<Var<double>(Graph<double>&, std::vector<Var<double>>&)>& f,
                     double tol = 1e-6, double h = 1e-6) {
    ParamStore<double> store;  // unused, inputs only
    GradBuffer<double> sink(store);
    Graph<double> g(&store, &sink);
    std::vector<Var<double>> vars;
    vars.reserve(inputs.size());
    for (const auto& m : inputs) vars.push_back(g.input(m));
    Var<double> loss = f(g, vars);
    REQUIRE(loss.rows() == 1);
    REQUIRE(loss.cols() == 1);
    g.backward(loss);

    auto eval = [&](const std::vector<Md>& xs) {
        Graph<double> ge;
        std::vector<Var<double>> vs;
        for (const auto& m : xs) vs.push_back(ge.input(m));
        return f(ge, vs).value()(0, 0);
    };

    for (std::size_t k = 0; k < inputs.size(); ++k) {
        const Md analytic = vars[k].grad().size() > 0
                                ? Md(vars[k].grad())
                                : Md(Md::Zero(inputs[k].rows(), inputs[k].cols()));
        for (Eigen::Index i = 0; i < inputs[k].rows(); ++i) {
            for (Eigen::Index j = 0; j < inputs[k].cols(); ++j) {
                std::vector<Md> plus = inputs, minus = inputs;
                plus[k](i, j) += h;
                minus[k](i, j) -= h;
                double fd = (eval(plus) - eval(minus)) / (2 * h);
                double got = analytic(i, j);
                double denom = std::max({std::abs(fd), std::abs(got), 1.0});
                INFO("input ", k, " entry (", i, ",", j, ") fd=", fd, " analytic=", got);
                CHECK(std::abs(fd - got) / denom < tol);
            }
        }
    }
}

}  // namespace

TEST_CASE("elementwise and matmul ops match finite differences") {
    Rng rng(7);
    std::vector<Md> in = {random_mat(rng, 3, 4), random_mat(rng, 3, 4)};
    check_gradients(in, [](Graph<double>& g, std::vector<Var<double>>& v) {
        auto s = ag::add(g, ag::cwise_mul(g, v[0], v[1]), ag::sub(g, v[0], v[1]));
        return ag::mean_all(g, ag::gelu(g, s));
    });

    std::vector<Md> mm = {random_mat(rng, 3, 5), random_mat(rng, 5, 2)};
    check_gradients(mm, [](Graph<double>& g, std::vector<Var<double>>& v) {
        return ag::sum_all(g, ag::matmul(g, v[0], v[1]));
    });

    std::vector<Md> nt = {random_mat(rng, 3, 5), random_mat(rng, 4, 5)};
    check_gradients(nt, [](Graph<double>& g, std::vector<Var<double>>& v) {
        return ag::mean_all(g, ag::matmul_nt(g, v[0], v[1]));
    });
}

TEST_CASE("softmax, layernorm, l2normalize match finite differences") {
    Rng rng(11);
    std::vector<Md> in = {random_mat(rng, 4, 6)};
    check_gradients(in, [](Graph<double>& g, std::vector<Var<double>>& v) {
        Md w = Md::Ones(4, 6);
        w(0, 0) = 3.0;
        w(2, 4) = -2.0;
        return ag::sum_all(g, ag::cwise_mul(g, ag::softmax_rows(g, v[0]), g.constant(w)));
    });

    std::vector<Md> ln = {random_mat(rng, 3, 8), random_mat(rng, 1, 8), random_mat(rng, 1, 8)};
    check_gradients(ln, [](Graph<double>& g, std::vector<Var<double>>& v) {
        return ag::mean_all(g, ag::layernorm_rows(g, v[0], v[1], v[2]));
    }, 1e-5);

    std::vector<Md> l2 = {random_mat(rng, 3, 5)};
    check_gradients(l2, [](Graph<double>& g, std::vector<Var<double>>& v) {
        Md w(3, 5);
        for (int i = 0; i < 15; ++i) w(i / 5, i % 5) = 0.3 * i - 1.0;
        return ag::sum_all(g, ag::cwise_mul(g, ag::l2normalize_rows(g, v[0]), g.constant(w)));
    });
}

TEST_CASE("reductions, slicing, concatenation match finite differences") {
    Rng rng(13);
    std::vector<Md> in = {random_mat(rng, 4, 3), random_mat(rng, 2, 3)};
    check_gradients(in, [](Graph<double>& g, std::vector<Var<double>>& v) {
        auto c = ag::concat_rows(g, {v[0], v[1]});
        auto s = ag::slice_rows(g, c, 1, 4);
        auto t = ag::slice_cols(g, s, 1, 2);
        return ag::mean_all(g, ag::cwise_mul(g, t, t));
    });

    std::vector<Md> cc = {random_mat(rng, 3, 2), random_mat(rng, 3, 4)};
    check_gradients(cc, [](Graph<double>& g, std::vector<Var<double>>& v) {
        auto c = ag::concat_cols(g, {v[0], v[1]});
        return ag::sum_all(g, ag::mean_over_rows(g, c));
    });

    std::vector<Md> rv = {random_mat(rng, 4, 3), random_mat(rng, 1, 3)};
    check_gradients(rv, [](Graph<double>& g, std::vector<Var<double>>& v) {
        return ag::mean_all(g, ag::add_rowvec(g, v[0], v[1]));
    });
}

TEST_CASE("losses match finite differences") {
    Rng rng(17);
    std::vector<Md> ce = {random_mat(rng, 5, 4)};
    std::vector<int> targets = {0, 3, 1, 1, 2};
    check_gradients(ce, [&](Graph<double>& g, std::vector<Var<double>>& v) {
        return ag::cross_entropy_rows(g, v[0], targets);
    });

    Md target = random_mat(rng, 4, 4);
    std::vector<Md> ms = {random_mat(rng, 4, 4)};
    check_gradients(ms, [&](Graph<double>& g, std::vector<Var<double>>& v) {
        return ag::mse_const(g, v[0], target);
    });

    Md bt = Md::Zero(3, 4);
    bt(0, 0) = 1.0;
    bt(1, 2) = 1.0;
    bt(2, 3) = 0.5;
    std::vector<Md> bc = {random_mat(rng, 3, 4)};
    check_gradients(bc, [&](Graph<double>& g, std::vector<Var<double>>& v) {
        return ag::bce_logits_mean(g, v[0], bt);
    });
}

TEST_CASE("scalar ops and straight-through estimator") {
    Rng rng(23);
    std::vector<Md> sc = {random_mat(rng, 3, 3), Md::Constant(1, 1, 0.7)};
    check_gradients(sc, [](Graph<double>& g, std::vector<Var<double>>& v) {
        auto inv = ag::reciprocal(g, ag::exp_elem(g, v[1]));
        return ag::mean_all(g, ag::scale_var(g, v[0], inv));
    });

    // straight-through: gradient of mean(replacement-valued node) flows to x
    ParamStore<double> store;
    GradBuffer<double> sink(store);
    Graph<double> g(&store, &sink);
    Md x = random_mat(rng, 2, 3);
    auto vx = g.input(x);
    Md repl = random_mat(rng, 2, 3);
    auto q = ag::st_passthrough(g, vx, repl);
    CHECK(q.value() == repl);
    g.backward(ag::mean_all(g, q));
    CHECK(vx.grad().isApprox(Md::Constant(2, 3, 1.0 / 6.0)));
}

TEST_CASE("embedding gather scatters gradients to the right rows") {
    Rng rng(29);
    ParamStore<double> store;
    int table_id = store.add("table", random_mat(rng, 6, 3));
    GradBuffer<double> sink(store);
    Graph<double> g(&store, &sink);
    std::vector<int> ids = {2, 2, 5};
    auto got = ag::embedding_rows(g, g.param(table_id), ids);
    CHECK(got.value().row(0) == store.value(table_id).row(2));
    g.backward(ag::sum_all(g, got));
    CHECK(sink[table_id](2, 0) == doctest::Approx(2.0));
    CHECK(sink[table_id](5, 0) == doctest::Approx(1.0));
    CHECK(sink[table_id](0, 0) == doctest::Approx(0.0));
}

TEST_CASE("parameter gradients accumulate through the sink") {
    Rng rng(31);
    ParamStore<double> store;
    int w = store.add("w", random_mat(rng, 3, 2));
    GradBuffer<double> sink(store);

    Md x = random_mat(rng, 4, 3);
    auto run = [&](const Md& wval) {
        ParamStore<double> s2;
        s2.add("w", wval);
        GradBuffer<double> sink2(s2);
        Graph<double> g(&s2, &sink2);
        auto y = ag::matmul(g, g.constant(x), g.param(0));
        return ag::mean_all(g, ag::cwise_mul(g, y, y)).value()(0, 0);
    };

    Graph<double> g(&store, &sink);
    auto y = ag::matmul(g, g.constant(x), g.param(w));
    g.backward(ag::mean_all(g, ag::cwise_mul(g, y, y)));

    double h = 1e-6;
    for (Eigen::Index i = 0; i < 3; ++i)
        for (Eigen::Index j = 0; j < 2; ++j) {
            Md wp = store.value(w), wm = store.value(w);
            wp(i, j) += h;
            wm(i, j) -= h;
            double fd = (run(wp) - run(wm)) / (2 * h);
            CHECK(std::abs(fd - sink[w](i, j)) < 1e-6 * std::max(1.0, std::abs(fd)));
        }
}

TEST_CASE("adam drives a least-squares problem to its optimum") {
    Rng rng(37);
    ParamStore<double> store;
    int w = store.add("w", Md::Zero(2, 1));
    Md a = random_mat(rng, 16, 2);
    Md target_w(2, 1);
    target_w << 1.5, -0.75;
    Md b = a * target_w;

    ag::Adam<double> opt(store, {.lr = 0.05});
    GradBuffer<double> sink(store);
    for (int it = 0; it < 800; ++it) {
        sink.zero();
        Graph<double> g(&store, &sink);
        auto pred = ag::matmul(g, g.constant(a), g.param(w));
        g.backward(ag::mse_const(g, pred, b));
        opt.step(sink);
    }
    CHECK((store.value(w) - target_w).norm() < 1e-3);
}

TEST_CASE("freeze mask keeps unlisted parameters untouched") {
    Rng rng(41);
    ParamStore<double> store;
    int w0 = store.add("w0", random_mat(rng, 2, 2));
    int w1 = store.add("w1", random_mat(rng, 2, 2));
    Md w1_before = store.value(w1);

    ag::Adam<double> opt(store, {.lr = 0.1});
    GradBuffer<double> sink(store);
    sink[w0].setOnes();
    sink[w1].setOnes();
    opt.step(sink, {w0});
    CHECK(store.value(w1) == w1_before);
    CHECK(store.value(w0) != w1_before);
}
