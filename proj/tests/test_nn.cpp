#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "recon3d/nn/blocks.hpp"
#include "recon3d/nn/checkpoint.hpp"

using namespace recon3d;
using Md = ag::Mat<double>;
using Mf = ag::Mat<float>;

namespace {
template <typename S>
ag::Mat<S> random_mat(Rng& rng, Eigen::Index r, Eigen::Index c, double scale = 1.0) {
    ag::Mat<S> m(r, c);
    for (Eigen::Index j = 0; j < c; ++j)
        for (Eigen::Index i = 0; i < r; ++i) m(i, j) = static_cast<S>(rng.normal(0.0, scale));
    return m;
}
}  // namespace

TEST_CASE("transformer block: training and eval paths agree") {
    Rng rng(3);
    ag::ParamStore<double> ps;
    Rng init(11);
    nn::TransformerBlock<double> block(ps, init, "b", 16, 4, 32);
    Md x = random_mat<double>(rng, 7, 16);

    ag::GradBuffer<double> grads(ps);
    ag::Graph<double> g(&ps, &grads);
    Md via_ag = block.forward(g, g.constant(x), false).value();
    Md via_eval = block.forward_eval(x, false);
    CHECK((via_ag - via_eval).cwiseAbs().maxCoeff() < 1e-12);

    Md causal_ag = block.forward(g, g.constant(x), true).value();
    Md causal_eval = block.forward_eval(x, true);
    CHECK((causal_ag - causal_eval).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("causal incremental decoding matches the full forward pass") {
    Rng rng(5);
    ag::ParamStore<double> ps;
    Rng init(13);
    nn::TransformerBlock<double> block(ps, init, "b", 16, 4, 32);
    Md x = random_mat<double>(rng, 9, 16);

    Md full = block.forward_eval(x, true);
    nn::KvCache<double> cache;
    cache.reset(9, 16);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        Md row = block.step_eval(x.row(i), cache);
        CHECK((row - full.row(i)).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("block parameters receive finite-difference-correct gradients") {
    Rng rng(7);
    ag::ParamStore<double> ps;
    Rng init(17);
    nn::TransformerBlock<double> block(ps, init, "b", 8, 2, 16);
    Md x = random_mat<double>(rng, 5, 8);

    ag::GradBuffer<double> grads(ps);
    ag::Graph<double> g(&ps, &grads);
    g.backward(ag::mean_all(g, block.forward(g, g.constant(x), true)));

    auto eval_loss = [&]() {
        ag::Graph<double> ge;
        ag::GradBuffer<double> tmp(ps);
        ag::Graph<double> gg(&ps, &tmp, false);
        return block.forward(gg, gg.constant(x), true).value().mean();
    };

    Rng pick(23);
    const double h = 1e-6;
    for (int trial = 0; trial < 10; ++trial) {
        int id = static_cast<int>(pick.uniform_int(0, ps.size() - 1));
        auto& value = ps.value(id);
        Eigen::Index i = pick.uniform_int(0, value.rows() - 1);
        Eigen::Index j = pick.uniform_int(0, value.cols() - 1);
        double keep = value(i, j);
        value(i, j) = keep + h;
        double up = eval_loss();
        value(i, j) = keep - h;
        double dn = eval_loss();
        value(i, j) = keep;
        double fd = (up - dn) / (2 * h);
        INFO("param ", ps.entry(id).name, " (", i, ",", j, ")");
        CHECK(std::abs(fd - grads[id](i, j)) < 1e-5 * std::max(1.0, std::abs(fd)));
    }
}

TEST_CASE("checkpoints round-trip and verify shapes") {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "recon3d_ckpt_test";
    fs::create_directories(dir);

    Rng init(29);
    ag::ParamStore<float> ps;
    nn::Linear<float> lin(ps, init, "layer", 6, 4);
    std::vector<int> ids = {lin.w, lin.b};
    Mf w_before = ps.value(lin.w);
    nn::save_checkpoint(ps, ids, dir / "test.ckpt");

    ps.value(lin.w).setZero();
    nn::load_checkpoint(ps, ids, dir / "test.ckpt");
    CHECK(ps.value(lin.w) == w_before);

    // manifest sidecar lists name, shape and hash
    std::ifstream mf(dir / "test.ckpt.manifest");
    std::string header, name;
    long rows = 0, cols = 0;
    std::string hash;
    std::getline(mf, header);
    mf >> name >> rows >> cols >> hash;
    CHECK(name == "layer.weight");
    CHECK(rows == 6);
    CHECK(cols == 4);
    CHECK(hash == nn::param_hash(ps.value(lin.w)));

    // a store with a different shape must refuse the file
    ag::ParamStore<float> other;
    Rng init2(31);
    nn::Linear<float> wrong(other, init2, "layer", 5, 4);
    CHECK_THROWS_AS(nn::load_checkpoint(other, {wrong.w, wrong.b}, dir / "test.ckpt"),
                    shape_error);

    fs::remove_all(dir);
}

TEST_CASE("group hash changes with content") {
    Rng init(37);
    ag::ParamStore<float> ps;
    nn::Linear<float> lin(ps, init, "layer", 3, 3);
    std::string h1 = nn::group_hash(ps, {lin.w, lin.b});
    ps.value(lin.w)(0, 0) += 1.0f;
    CHECK(nn::group_hash(ps, {lin.w, lin.b}) != h1);
}
