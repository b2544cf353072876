#include "recon3d/harness/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

namespace recon3d {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<std::size_t> shuffled_indices(std::size_t n, Rng& rng) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    for (std::size_t i = n; i > 1; --i)
        std::swap(idx[i - 1], idx[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);
    return idx;
}

std::string fmt_loss(const char* stage, int epoch, int total, double loss, double lr) {
    std::ostringstream os;
    os.precision(5);
    os << stage << " epoch " << epoch + 1 << "/" << total << " loss " << loss << " lr " << lr;
    return os.str();
}

}  // namespace

DataCache DataCache::load(const DatasetManifest& manifest) {
    DataCache cache;
    cache.manifest = manifest;
    for (const auto& obj : manifest.objects) {
        if (obj.partition != "core-train") continue;
        Object o;
        o.id = obj.object_id;
        o.class_id = obj.class_id;
        cache.object_index[o.id] = cache.train_objects.size();
        cache.train_objects.push_back(std::move(o));
    }
    // geometry and views come from any one trial directory of the object
    for (const auto& t : manifest.trials) {
        if (t.split != "train") continue;
        auto it = cache.object_index.find(t.object_id);
        if (it != cache.object_index.end() && cache.train_objects[it->second].views.empty()) {
            cache.train_objects[it->second].voxel = load_trial_voxel(manifest, t);
            cache.train_objects[it->second].views = load_trial_views(manifest, t).images;
        }
        Trial tr;
        tr.ref = t;
        tr.frames = load_trial(manifest, t).frames;
        cache.train_trials.push_back(std::move(tr));
    }
    if (cache.train_trials.empty()) throw config_error("dataset has no training trials");
    return cache;
}

void DataCache::refresh_view_embeddings(const ModelBundle& bundle) {
    for (auto& obj : train_objects) {
        obj.view_embeds.clear();
        obj.view_embeds.reserve(obj.views.size());
        for (const auto& v : obj.views) obj.view_embeds.push_back(bundle.vision().embed(v));
    }
}

void DataCache::refresh_codes(const ModelBundle& bundle) {
    for (auto& obj : train_objects) obj.codes = bundle.vq().encode(obj.voxel);
}

LatentFeature<float> DataCache::object_cv(std::size_t object_idx, int n, int lc,
                                          std::uint64_t seed) const {
    const auto& obj = train_objects.at(object_idx);
    if (obj.view_embeds.empty())
        throw argument_error("object_cv: view embeddings not refreshed");
    const int total = static_cast<int>(obj.view_embeds.size());
    if (n < 1 || n > total) throw argument_error("object_cv: n out of range");
    std::vector<int> idx(static_cast<std::size_t>(total));
    for (int i = 0; i < total; ++i) idx[static_cast<std::size_t>(i)] = i;
    Rng rng(seed);
    for (int i = 0; i < n; ++i) {
        int j = static_cast<int>(rng.uniform_int(i, total - 1));
        std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    }
    ag::Mat<float> tokens(lc, obj.view_embeds[0].cols());
    for (int r = 0; r < lc; ++r)
        tokens.row(r) =
            obj.view_embeds[static_cast<std::size_t>(idx[static_cast<std::size_t>(r % n)])].row(0);
    return make_latent(std::move(tokens), "c_v");
}

StageResult train_vision(ModelBundle& bundle, DataCache& cache, const LogFn& log) {
    auto t0 = Clock::now();
    const auto& sched = bundle.cfg().train.vision;
    StageResult result;

    // (object, view) classification pairs
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t o = 0; o < cache.train_objects.size(); ++o)
        for (std::size_t v = 0; v < cache.train_objects[o].views.size(); ++v)
            pairs.emplace_back(o, v);

    ag::Adam<float> opt(bundle.params(),
                        {.lr = static_cast<float>(sched.lr),
                         .clip_norm = static_cast<float>(bundle.cfg().train.clip_norm),
                         .total_steps = static_cast<long>(
                             sched.epochs * (pairs.size() / std::max(1, sched.batch) + 1))});
    ag::GradBuffer<float> grads(bundle.params());
    const std::vector<int>& mask = bundle.group_ids("vision");

    Rng rng(derive_seed(bundle.cfg().seed, {0x7121ULL}));
    for (int epoch = 0; epoch < sched.epochs; ++epoch) {
        auto order = shuffled_indices(pairs.size(), rng);
        double epoch_loss = 0;
        std::size_t batches = 0;
        for (std::size_t at = 0; at < order.size(); at += static_cast<std::size_t>(sched.batch)) {
            std::size_t end = std::min(order.size(), at + static_cast<std::size_t>(sched.batch));
            grads.zero();
            ag::Graph<float> g(&bundle.params(), &grads);
            std::vector<ag::Var<float>> logits;
            std::vector<int> targets;
            for (std::size_t i = at; i < end; ++i) {
                const auto& [o, v] = pairs[order[i]];
                logits.push_back(
                    bundle.vision().class_logits_ag(g, cache.train_objects[o].views[v]));
                targets.push_back(cache.train_objects[o].class_id);
            }
            ag::Var<float> loss =
                ag::cross_entropy_rows(g, ag::concat_rows(g, logits), targets);
            g.backward(loss);
            opt.step(grads, mask);
            epoch_loss += loss.value()(0, 0);
            ++batches;
        }
        result.epoch_losses.push_back(epoch_loss / static_cast<double>(batches));
        if (log) log(fmt_loss("vision", epoch, sched.epochs, result.epoch_losses.back(),
                              opt.current_lr()));
    }
    cache.refresh_view_embeddings(bundle);
    result.wall_seconds = seconds_since(t0);
    return result;
}

StageResult train_stage1(ModelBundle& bundle, DataCache& cache, const LogFn& log) {
    auto t0 = Clock::now();
    const auto& cfg = bundle.cfg();
    const auto& sched = cfg.train.stage1;
    StageResult result;

    if (cache.train_objects.empty() || cache.train_objects[0].view_embeds.empty())
        cache.refresh_view_embeddings(bundle);

    // joint mask: frame encoder + aggregator + temperature (+ denoiser)
    std::vector<int> mask = bundle.group_ids("nfe");
    if (!cfg.no_diffusion)
        for (int id : bundle.group_ids("fbdm")) mask.push_back(id);

    const bool use_clip = !cfg.no_contrastive && cfg.train.contrastive_weight > 0;
    const bool use_diffusion = !cfg.no_diffusion;
    if (!use_clip && !use_diffusion) {
        // nothing to optimise in stage 1 under the double ablation
        if (log) log("stage1 skipped: both objectives ablated");
        result.wall_seconds = seconds_since(t0);
        return result;
    }

    ag::Adam<float> opt(bundle.params(),
                        {.lr = static_cast<float>(sched.lr),
                         .clip_norm = static_cast<float>(cfg.train.clip_norm),
                         .total_steps = static_cast<long>(
                             sched.epochs *
                             (cache.train_trials.size() / std::max(1, sched.batch) + 1))});
    ag::GradBuffer<float> grads(bundle.params());
    Rng rng(derive_seed(cfg.seed, {0x57a1ULL}));

    for (int epoch = 0; epoch < sched.epochs; ++epoch) {
        auto order = shuffled_indices(cache.train_trials.size(), rng);
        double epoch_loss = 0;
        std::size_t batches = 0;
        for (std::size_t at = 0; at < order.size(); at += static_cast<std::size_t>(sched.batch)) {
            std::size_t end = std::min(order.size(), at + static_cast<std::size_t>(sched.batch));
            grads.zero();
            ag::Graph<float> g(&bundle.params(), &grads);

            std::vector<ag::Var<float>> cf_pooled, cf_tokens;
            std::vector<ag::Mat<float>> cv_tokens;
            for (std::size_t i = at; i < end; ++i) {
                const auto& trial = cache.train_trials[order[i]];
                std::uint64_t tseed =
                    derive_seed(cfg.seed, {0xf4a3e5ULL, trial.ref.trial_seed,
                                           static_cast<std::uint64_t>(epoch)});
                std::vector<ImageF> frames;
                for (int idx : select_frames(static_cast<int>(trial.frames.size()),
                                             FrameSelectMode::Train, tseed))
                    frames.push_back(trial.frames[static_cast<std::size_t>(idx)]);
                auto frame_tokens = bundle.frame_encoder().encode_frames_ag(g, frames);
                ag::Var<float> tokens = bundle.aggregator().forward_ag(g, frame_tokens);
                cf_tokens.push_back(tokens);
                cf_pooled.push_back(ag::mean_over_rows(g, tokens));

                std::size_t obj = cache.object_index.at(trial.ref.object_id);
                cv_tokens.push_back(cache
                                        .object_cv(obj, cfg.n_view_frames, cfg.fa.lc,
                                                   derive_seed(tseed, {0xc7ULL}))
                                        .tokens);
            }

            ag::Var<float> loss;
            if (use_clip) {
                std::vector<ag::Var<float>> cv_pooled_vars;
                for (const auto& cv : cv_tokens)
                    cv_pooled_vars.push_back(g.constant(cv.colwise().mean()));
                ag::Var<float> tau = ag::exp_elem(g, g.param(bundle.log_tau_id()));
                ag::Var<float> lc = clip_align_loss(g, ag::concat_rows(g, cf_pooled),
                                                    ag::concat_rows(g, cv_pooled_vars), tau);
                lc = ag::scale(g, lc, static_cast<float>(cfg.train.contrastive_weight));
                loss = lc;
            }
            if (use_diffusion) {
                ag::Var<float> ld = fbdm_loss(g, bundle.denoiser(), bundle.schedule(), cv_tokens,
                                              cf_tokens, rng);
                loss = loss.valid() ? ag::add(g, loss, ld) : ld;
            }
            g.backward(loss);
            opt.step(grads, mask);
            epoch_loss += loss.value()(0, 0);
            ++batches;
        }
        result.epoch_losses.push_back(epoch_loss / static_cast<double>(batches));
        if (log) log(fmt_loss("stage1", epoch, sched.epochs, result.epoch_losses.back(),
                              opt.current_lr()));
    }
    result.wall_seconds = seconds_since(t0);
    return result;
}

StageResult train_vq(ModelBundle& bundle, DataCache& cache, const LogFn& log) {
    auto t0 = Clock::now();
    const auto& sched = bundle.cfg().train.vq;
    StageResult result;

    ag::Adam<float> opt(bundle.params(),
                        {.lr = static_cast<float>(sched.lr),
                         .clip_norm = static_cast<float>(bundle.cfg().train.clip_norm),
                         .total_steps = static_cast<long>(
                             sched.epochs *
                             (cache.train_objects.size() / std::max(1, sched.batch) + 1))});
    ag::GradBuffer<float> grads(bundle.params());
    const std::vector<int>& mask = bundle.group_ids("vq");
    Rng rng(derive_seed(bundle.cfg().seed, {0x50f7ULL}));

    for (int epoch = 0; epoch < sched.epochs; ++epoch) {
        auto order = shuffled_indices(cache.train_objects.size(), rng);
        double epoch_loss = 0;
        std::size_t batches = 0;
        std::vector<int> usage(static_cast<std::size_t>(bundle.cfg().vq.codebook_size), 0);
        for (std::size_t at = 0; at < order.size(); at += static_cast<std::size_t>(sched.batch)) {
            std::size_t end = std::min(order.size(), at + static_cast<std::size_t>(sched.batch));
            grads.zero();
            ag::Graph<float> g(&bundle.params(), &grads);
            ag::Var<float> loss;
            for (std::size_t i = at; i < end; ++i) {
                ag::Var<float> item =
                    bundle.vq().loss_ag(g, cache.train_objects[order[i]].voxel, &usage);
                loss = loss.valid() ? ag::add(g, loss, item) : item;
            }
            loss = ag::scale(g, loss, 1.0f / static_cast<float>(end - at));
            g.backward(loss);
            opt.step(grads, mask);
            epoch_loss += loss.value()(0, 0);
            ++batches;
        }
        // keep the whole codebook live
        std::vector<VoxelGrid> sample;
        for (int i = 0; i < 8 && i < static_cast<int>(cache.train_objects.size()); ++i)
            sample.push_back(
                cache.train_objects[static_cast<std::size_t>(rng.uniform_int(
                                        0, static_cast<std::int64_t>(cache.train_objects.size()) - 1))]
                    .voxel);
        bundle.vq().restart_dead_codes(usage, sample, rng);

        result.epoch_losses.push_back(epoch_loss / static_cast<double>(batches));
        if (log) log(fmt_loss("vq", epoch, sched.epochs, result.epoch_losses.back(),
                              opt.current_lr()));
    }
    cache.refresh_codes(bundle);
    result.wall_seconds = seconds_since(t0);
    return result;
}

StageResult train_ar_base(ModelBundle& bundle, DataCache& cache, const LogFn& log) {
    auto t0 = Clock::now();
    const auto& cfg = bundle.cfg();
    const auto& sched = cfg.train.ar_base;
    StageResult result;

    if (cache.train_objects.empty() || cache.train_objects[0].codes.codes.empty())
        cache.refresh_codes(bundle);

    // base blocks + conditioning path; adapters stay at their zero init
    std::vector<int> mask = bundle.ar().frozen_base_ids();
    for (int id : bundle.ar().cond_ids()) mask.push_back(id);

    ag::Adam<float> opt(bundle.params(),
                        {.lr = static_cast<float>(sched.lr),
                         .clip_norm = static_cast<float>(cfg.train.clip_norm),
                         .total_steps = static_cast<long>(
                             sched.epochs *
                             (cache.train_objects.size() / std::max(1, sched.batch) + 1))});
    ag::GradBuffer<float> grads(bundle.params());
    Rng rng(derive_seed(cfg.seed, {0xa7baULL}));
    const ag::Mat<float> cf_zero = ag::Mat<float>::Zero(1, cfg.fa.dc);

    for (int epoch = 0; epoch < sched.epochs; ++epoch) {
        auto order = shuffled_indices(cache.train_objects.size(), rng);
        double epoch_loss = 0;
        std::size_t batches = 0;
        for (std::size_t at = 0; at < order.size(); at += static_cast<std::size_t>(sched.batch)) {
            std::size_t end = std::min(order.size(), at + static_cast<std::size_t>(sched.batch));
            grads.zero();
            ag::Graph<float> g(&bundle.params(), &grads);
            ag::Var<float> loss;
            for (std::size_t i = at; i < end; ++i) {
                const auto& obj = cache.train_objects[order[i]];
                LatentFeature<float> cv = cache.object_cv(
                    order[i], cfg.n_view_frames, cfg.fa.lc,
                    derive_seed(cfg.seed, {0xc01ULL, static_cast<std::uint64_t>(epoch),
                                           static_cast<std::uint64_t>(order[i])}));
                ag::Var<float> logits = bundle.ar().logits_ag(g, obj.codes.codes,
                                                              g.constant(cv.tokens),
                                                              g.constant(cf_zero));
                ag::Var<float> item = ag::cross_entropy_rows(g, logits, obj.codes.codes);
                loss = loss.valid() ? ag::add(g, loss, item) : item;
            }
            loss = ag::scale(g, loss, 1.0f / static_cast<float>(end - at));
            g.backward(loss);
            opt.step(grads, mask);
            epoch_loss += loss.value()(0, 0);
            ++batches;
        }
        result.epoch_losses.push_back(epoch_loss / static_cast<double>(batches));
        if (log) log(fmt_loss("ar_base", epoch, sched.epochs, result.epoch_losses.back(),
                              opt.current_lr()));
    }
    result.wall_seconds = seconds_since(t0);
    return result;
}

StageResult train_stage2(ModelBundle& bundle, DataCache& cache, const LogFn& log) {
    auto t0 = Clock::now();
    const auto& cfg = bundle.cfg();
    const auto& sched = cfg.train.stage2;
    StageResult result;

    if (cache.train_objects.empty() || cache.train_objects[0].codes.codes.empty())
        cache.refresh_codes(bundle);
    if (cache.train_objects.empty() || cache.train_objects[0].view_embeds.empty())
        cache.refresh_view_embeddings(bundle);

    // adapters + condition projections + upstream encoder/aggregator;
    // VQ and base AR blocks stay frozen
    std::vector<int> mask = bundle.ar().adapter_ids();
    for (int id : bundle.ar().cond_ids()) mask.push_back(id);
    for (int id : bundle.group_ids("nfe")) mask.push_back(id);

    ag::Adam<float> opt(bundle.params(),
                        {.lr = static_cast<float>(sched.lr),
                         .clip_norm = static_cast<float>(cfg.train.clip_norm),
                         .total_steps = static_cast<long>(
                             sched.epochs *
                             (cache.train_trials.size() / std::max(1, sched.batch) + 1))});
    ag::GradBuffer<float> grads(bundle.params());
    Rng rng(derive_seed(cfg.seed, {0x57a2ULL}));

    for (int epoch = 0; epoch < sched.epochs; ++epoch) {
        auto order = shuffled_indices(cache.train_trials.size(), rng);
        double epoch_loss = 0;
        std::size_t batches = 0;
        for (std::size_t at = 0; at < order.size(); at += static_cast<std::size_t>(sched.batch)) {
            std::size_t end = std::min(order.size(), at + static_cast<std::size_t>(sched.batch));
            grads.zero();
            ag::Graph<float> g(&bundle.params(), &grads);
            ag::Var<float> loss;
            for (std::size_t i = at; i < end; ++i) {
                const auto& trial = cache.train_trials[order[i]];
                std::uint64_t tseed =
                    derive_seed(cfg.seed, {0x57a9eULL, trial.ref.trial_seed,
                                           static_cast<std::uint64_t>(epoch)});
                std::vector<ImageF> frames;
                for (int idx : select_frames(static_cast<int>(trial.frames.size()),
                                             FrameSelectMode::Train, tseed))
                    frames.push_back(trial.frames[static_cast<std::size_t>(idx)]);
                auto frame_tokens = bundle.frame_encoder().encode_frames_ag(g, frames);
                ag::Var<float> cf_tokens = bundle.aggregator().forward_ag(g, frame_tokens);
                ag::Var<float> cf_pooled = ag::mean_over_rows(g, cf_tokens);

                std::size_t obj = cache.object_index.at(trial.ref.object_id);
                LatentFeature<float> cv =
                    cache.object_cv(obj, cfg.n_view_frames, cfg.fa.lc, derive_seed(tseed, {0xceULL}));
                const auto& codes = cache.train_objects[obj].codes.codes;
                ag::Var<float> logits =
                    bundle.ar().logits_ag(g, codes, g.constant(cv.tokens), cf_pooled);
                ag::Var<float> item = ag::cross_entropy_rows(g, logits, codes);
                loss = loss.valid() ? ag::add(g, loss, item) : item;
            }
            loss = ag::scale(g, loss, 1.0f / static_cast<float>(end - at));
            g.backward(loss);
            opt.step(grads, mask);
            epoch_loss += loss.value()(0, 0);
            ++batches;
        }
        result.epoch_losses.push_back(epoch_loss / static_cast<double>(batches));
        if (log) log(fmt_loss("stage2", epoch, sched.epochs, result.epoch_losses.back(),
                              opt.current_lr()));
    }
    result.wall_seconds = seconds_since(t0);
    return result;
}

double vq_roundtrip_iou(const ModelBundle& bundle, const DataCache& cache) {
    double total = 0;
    for (const auto& obj : cache.train_objects) {
        VoxelGrid round = bundle.vq().decode(bundle.vq().encode(obj.voxel));
        std::size_t inter = 0, uni = 0;
        for (std::size_t i = 0; i < obj.voxel.occupancy.size(); ++i) {
            bool a = obj.voxel.occupancy[i] != 0, b = round.occupancy[i] != 0;
            inter += (a && b) ? 1 : 0;
            uni += (a || b) ? 1 : 0;
        }
        total += uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
    }
    return total / static_cast<double>(cache.train_objects.size());
}

double heldout_nll(const ModelBundle& bundle, const DataCache& cache,
                   const std::vector<const TrialRef*>& trials) {
    const auto& cfg = bundle.cfg();
    double total = 0;
    int count = 0;
    for (const TrialRef* t : trials) {
        FmriTrial trial = load_trial(cache.manifest, *t);
        std::vector<ImageF> frames;
        for (int idx : select_frames(static_cast<int>(trial.frames.size()), FrameSelectMode::Eval,
                                     t->trial_seed))
            frames.push_back(trial.frames[static_cast<std::size_t>(idx)]);
        LatentFeature<float> cf = bundle.compute_cf(frames);
        VoxelGrid voxel = load_trial_voxel(cache.manifest, *t);
        CodeSequence codes = bundle.vq().encode(voxel);
        // deterministic eval-style condition: first n views of the object
        ViewSet views = load_trial_views(cache.manifest, *t);
        ag::Mat<float> tokens(cfg.fa.lc, cfg.fa.dc);
        std::vector<ag::Mat<float>> embeds;
        for (int i = 0; i < cfg.n_view_frames && i < static_cast<int>(views.images.size()); ++i)
            embeds.push_back(bundle.vision().embed(views.images[static_cast<std::size_t>(i)]));
        for (int r = 0; r < cfg.fa.lc; ++r)
            tokens.row(r) = embeds[static_cast<std::size_t>(r) % embeds.size()].row(0);
        total += bundle.ar().nll(codes.codes, tokens, cf.pooled);
        ++count;
    }
    return total / std::max(1, count);
}

}  // namespace recon3d
