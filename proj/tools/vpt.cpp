// vpt -- command-line front end: synthetic data generation, training,
// transcription, evaluation, numerical self-checks, and fit previews.
#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "vpt/vpt.hpp"

namespace {

std::vector<int> parse_int_list(const std::string& text, std::size_t n, const char* what) {
    std::vector<int> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t comma = text.find(',', start);
        std::string part = text.substr(start, comma == std::string::npos ? comma : comma - start);
        try {
            out.push_back(std::stoi(part));
        } catch (const std::exception&) {
            vpt::fail("cannot parse ", what, " '", text, "'");
        }
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    if (out.size() != n) vpt::fail(what, " needs ", n, " comma-separated integers, got '", text, "'");
    return out;
}

vpt::NoteEvent parse_note(const std::string& text) {
    std::size_t comma = text.find(',');
    if (comma == std::string::npos) vpt::fail("--note wants ONSET,PITCH, got '", text, "'");
    try {
        return {std::stod(text.substr(0, comma)), std::stoi(text.substr(comma + 1))};
    } catch (const std::exception&) {
        vpt::fail("cannot parse --note '", text, "'");
    }
}

struct PreprocFlags {
    std::string fit = "stretch";
    bool grayscale = false;
    bool normalize = false;
    int target = 224;

    vpt::PreprocSettings settings() const {
        vpt::PreprocSettings ps;
        ps.fit = vpt::parse_fit(fit);
        ps.grayscale = grayscale;
        ps.normalize = normalize;
        ps.target = target;
        ps.validate();
        return ps;
    }
};

void add_preproc_flags(CLI::App* cmd, PreprocFlags& pf) {
    cmd->add_option("--fit", pf.fit, "square fit: stretch | aspect[:FACTOR] | split | split-stretch")
        ->capture_default_str();
    auto* gray = cmd->add_flag("--grayscale", pf.grayscale, "single-channel input");
    auto* norm = cmd->add_flag("--normalize-rgb", pf.normalize, "ImageNet channel normalization");
    gray->excludes(norm);
    norm->excludes(gray);
    cmd->add_option("--target", pf.target, "square input side in pixels")->capture_default_str();
}

int run_synth(const std::string& out_dir, vpt::SynthSpec spec, const std::string& box_text,
              const std::vector<std::string>& note_texts, bool ascending, int threads) {
    if (!box_text.empty()) {
        auto v = parse_int_list(box_text, 4, "--box");
        spec.box = {v[0], v[1], v[2], v[3], 1.0};
    }
    spec.descend_lr = !ascending;
    for (const auto& t : note_texts) spec.notes.push_back(parse_note(t));
    vpt::SynthResult result = vpt::generate(spec, out_dir, threads);
    std::cout << "video: " << result.manifest.frame_count << " frames, "
              << result.notes.size() << " onsets -> " << out_dir << "\n";
    return 0;
}

std::uint64_t file_seed(const std::string& text) {
    try {
        return std::stoull(text);
    } catch (const std::exception&) {
        vpt::fail("cannot parse seed '", text, "'");
    }
}

int run_train(const std::vector<std::string>& data_dirs, vpt::TrainConfig cfg) {
    std::vector<vpt::TrainVideo> videos;
    for (const auto& dir : data_dirs) {
        std::filesystem::path p(dir);
        videos.push_back({p / "video.manifest", p / "detections.txt", p / "truth.mid"});
    }
    vpt::TrainResult result = vpt::train(cfg, videos, &std::cout);
    std::cout << "trained " << result.steps_run << " steps on " << result.dataset_size
              << " windows, final loss " << result.final_loss << "\n"
              << "checkpoint: " << result.checkpoint_path.string() << "\n";
    return 0;
}

int run_transcribe(const std::string& manifest_path, const std::string& detections_path,
                   const std::string& ckpt_path, const std::string& out_path, bool drop_last,
                   double sigma, int radius, double threshold, int batch, int threads,
                   const std::string& dump_path) {
    vpt::VideoManifest manifest = vpt::read_manifest(manifest_path);
    vpt::BoundingBox box = vpt::select_box(vpt::load_detections(detections_path));
    vpt::Checkpoint ckpt = vpt::load_checkpoint(ckpt_path);
    vpt::PreprocSettings ps = vpt::preproc_from_meta(ckpt.meta, ckpt.params.cfg.res);

    vpt::ActivationMatrix act =
        vpt::sliding_predict(manifest, box, ckpt.params, ps, threads, drop_last, batch);
    if (!dump_path.empty()) {
        std::ofstream dump(dump_path, std::ios::trunc);
        if (!dump) vpt::fail("cannot write ", dump_path);
        dump << "frame,key,value\n";
        for (long c = 0; c < act.cols(); ++c)
            for (int k = 0; k < vpt::kHeads88; ++k)
                dump << act.first_frame + c << "," << k << "," << act.values(k, c) << "\n";
    }
    std::vector<vpt::NoteEvent> notes =
        vpt::postprocess(act, sigma, radius, static_cast<float>(threshold), threads);
    vpt::write_binary_file(out_path, vpt::write_smf(notes));
    std::cout << "transcribed " << notes.size() << " onsets -> " << out_path << "\n";
    return 0;
}

int run_eval(const std::vector<std::string>& ref_paths, const std::vector<std::string>& est_paths,
             double tolerance, const std::string& out_path) {
    if (ref_paths.size() != est_paths.size())
        vpt::fail("--ref and --est must be given the same number of times");
    if (ref_paths.empty()) vpt::fail("nothing to evaluate");

    std::ostringstream csv;
    csv << "file,precision,recall,f1,matched,n_ref,n_est\n";
    std::size_t pool_matched = 0, pool_ref = 0, pool_est = 0;
    double macro_p = 0, macro_r = 0, macro_f = 0;
    for (std::size_t i = 0; i < ref_paths.size(); ++i) {
        vpt::SmfData ref = vpt::parse_smf(vpt::read_binary_file(ref_paths[i]));
        vpt::SmfData est = vpt::parse_smf(vpt::read_binary_file(est_paths[i]));
        for (const auto* smf : {&ref, &est})
            if (smf->dropped_pitches > 0)
                std::cerr << "warning: " << smf->dropped_pitches
                          << " notes outside the 88-key range were ignored\n";
        vpt::MatchResult match = vpt::match_notes(ref.notes, est.notes, tolerance);
        vpt::Scores s = vpt::precision_recall_f1(match, ref.notes.size(), est.notes.size());
        csv << est_paths[i] << "," << s.precision << "," << s.recall << "," << s.f1 << ","
            << match.pairs.size() << "," << ref.notes.size() << "," << est.notes.size() << "\n";
        pool_matched += match.pairs.size();
        pool_ref += ref.notes.size();
        pool_est += est.notes.size();
        macro_p += s.precision, macro_r += s.recall, macro_f += s.f1;
    }
    auto n = static_cast<double>(ref_paths.size());
    csv << "macro," << macro_p / n << "," << macro_r / n << "," << macro_f / n << ",,,\n";
    vpt::Scores micro = vpt::precision_recall_f1(pool_matched, pool_ref, pool_est);
    csv << "micro," << micro.precision << "," << micro.recall << "," << micro.f1 << ","
        << pool_matched << "," << pool_ref << "," << pool_est << "\n";

    if (out_path.empty()) {
        std::cout << csv.str();
    } else {
        std::ofstream out(out_path, std::ios::trunc);
        if (!out) vpt::fail("cannot write ", out_path);
        out << csv.str();
        std::cout << "micro precision " << micro.precision << ", recall " << micro.recall
                  << ", f1 " << micro.f1 << " -> " << out_path << "\n";
    }
    return 0;
}

int run_gradcheck(vpt::ModelConfig cfg, std::uint64_t seed, double step, int batch, double weight,
                  double tol, int threads) {
    vpt::GradCheckReport report =
        vpt::gradient_check<double>(cfg, seed, step, batch, weight, threads);
    std::cout << "max relative error " << report.max_rel_err << " at " << report.worst_tensor
              << "[" << report.worst_index << "] (analytic " << report.analytic << ", numeric "
              << report.numeric << ")\n";
    if (report.max_rel_err >= tol) {
        std::cerr << "error: gradient check failed: " << report.max_rel_err << " >= " << tol << "\n";
        return 1;
    }
    std::cout << "gradient check passed (tolerance " << tol << ")\n";
    return 0;
}

int run_preview(const std::string& image_path, const std::string& box_text,
                const std::string& out_prefix, int target) {
    vpt::ImageU8 img = vpt::read_ppm(image_path);
    if (!box_text.empty()) {
        auto v = parse_int_list(box_text, 4, "--box");
        img = vpt::crop_frame(img, {v[0], v[1], v[2], v[3], 1.0});
    }
    vpt::ImageF base = vpt::to_float(img);
    const std::pair<const char*, const char*> modes[] = {
        {"stretch", "stretch"},
        {"aspect", "aspect"},
        {"split", "split"},
        {"split-stretch", "split-stretch"},
    };
    for (const auto& [flag, suffix] : modes) {
        vpt::ImageF fitted = vpt::fit_square(base, vpt::parse_fit(flag), target);
        std::string path = out_prefix + "-" + suffix + ".ppm";
        vpt::write_ppm(path, vpt::to_u8(fitted));
        std::cout << "wrote " << path << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"visual piano transcription pipeline"};
    app.require_subcommand(1);

    // ---- synth ----
    auto* synth = app.add_subcommand("synth", "generate a synthetic keyboard video + truth MIDI");
    std::string synth_out, synth_box, synth_seed = "0";
    std::vector<std::string> synth_notes;
    bool synth_ascending = false;
    int synth_threads = 1;
    vpt::SynthSpec spec;
    synth->add_option("--out", synth_out, "output directory")->required();
    synth->add_option("--seed", synth_seed, "master RNG seed")->capture_default_str();
    synth->add_option("--duration", spec.duration, "video length in seconds")->capture_default_str();
    synth->add_option("--fps", spec.fps, "frames per second")->capture_default_str();
    synth->add_option("--width", spec.width, "image width")->capture_default_str();
    synth->add_option("--height", spec.height, "image height")->capture_default_str();
    synth->add_option("--box", synth_box, "keyboard box X0,Y0,X1,Y1 (default 8,8,136,40)");
    synth->add_option("--rate", spec.rate, "onsets per second")->capture_default_str();
    synth->add_option("--press-frames", spec.press_frames, "visual press duration in frames")
        ->capture_default_str();
    synth->add_option("--darken", spec.darken, "pressed-key luminance drop in (0,1]")
        ->capture_default_str();
    synth->add_option("--noise", spec.noise_sigma, "per-frame pixel noise sigma")
        ->capture_default_str();
    synth->add_option("--pitch-lo", spec.pitch_lo, "lowest scheduled pitch")->capture_default_str();
    synth->add_option("--pitch-hi", spec.pitch_hi, "highest scheduled pitch")->capture_default_str();
    synth->add_flag("--ascending", synth_ascending, "pitch increases left to right");
    synth->add_option("--note", synth_notes, "explicit onset ONSET,PITCH (repeatable; disables scheduling)");
    synth->add_option("--threads", synth_threads, "worker threads")->capture_default_str();

    // ---- train ----
    auto* train_cmd = app.add_subcommand("train", "train a model on synthesized videos");
    std::vector<std::string> train_dirs;
    std::string train_ckpt, train_csv, train_jitter, train_seed = "0";
    vpt::TrainConfig tc;
    PreprocFlags train_pf;
    int train_frames = vpt::kWindowLen;
    train_cmd->add_option("--data", train_dirs, "synth output directory (repeatable)")->required();
    train_cmd->add_option("--checkpoint", train_ckpt, "checkpoint output path")->required();
    train_cmd->add_option("--metrics", train_csv, "training metrics CSV (step,lr,loss)");
    train_cmd->add_option("--steps", tc.steps, "optimizer steps")->capture_default_str();
    train_cmd->add_option("--batch", tc.batch_size, "batch size")->capture_default_str();
    train_cmd->add_option("--lr", tc.base_lr, "peak learning rate")->capture_default_str();
    train_cmd->add_option("--wd", tc.weight_decay, "weight decay")->capture_default_str();
    train_cmd->add_option("--warmup", tc.warmup_frac, "warmup fraction of total steps")
        ->capture_default_str();
    train_cmd->add_option("--weight", tc.class_weight, "positive class weight (1..4)")
        ->capture_default_str();
    train_cmd->add_option("--cull-keep", tc.cull_keep, "survival probability of all-zero windows")
        ->capture_default_str();
    train_cmd->add_option("--jitter", train_jitter, "box jitter LO,HI in pixels (default 0,0)");
    train_cmd->add_option("--noise", tc.noise_sigma, "training-time Gaussian noise sigma")
        ->capture_default_str();
    train_cmd->add_option("--frames", train_frames, "window length (fixed at 16)")
        ->capture_default_str();
    train_cmd->add_option("--tubelet", tc.model.tubelet, "tubelet depth")->capture_default_str();
    train_cmd->add_option("--patch", tc.model.patch, "spatial patch size")->capture_default_str();
    train_cmd->add_option("--dim", tc.model.dim, "embedding width")->capture_default_str();
    train_cmd->add_option("--layers", tc.model.layers, "encoder blocks")->capture_default_str();
    train_cmd->add_option("--heads", tc.model.heads, "attention heads")->capture_default_str();
    train_cmd->add_option("--seed", train_seed, "master RNG seed")->capture_default_str();
    train_cmd->add_option("--threads", tc.threads, "worker threads")->capture_default_str();
    train_cmd->add_option("--checkpoint-every", tc.checkpoint_every,
                          "also save every N steps (0 = final only)")
        ->capture_default_str();
    add_preproc_flags(train_cmd, train_pf);

    // ---- transcribe ----
    auto* tr = app.add_subcommand("transcribe", "video + checkpoint -> onset MIDI");
    std::string tr_manifest, tr_detections, tr_ckpt, tr_out, tr_dump;
    bool tr_drop_last = false;
    double tr_sigma = 1.0, tr_threshold = 0.5;
    int tr_radius = 16, tr_batch = 16, tr_threads = 1;
    tr->add_option("--manifest", tr_manifest, "video manifest")->required();
    tr->add_option("--detections", tr_detections, "keyboard detection file")->required();
    tr->add_option("--checkpoint", tr_ckpt, "trained weights")->required();
    tr->add_option("--out", tr_out, "output MIDI path")->required();
    tr->add_flag("--drop-last-window", tr_drop_last,
                 "emit frame_count-16 activation columns instead of the full fencepost count");
    tr->add_option("--sigma", tr_sigma, "temporal smoothing sigma")->capture_default_str();
    tr->add_option("--radius", tr_radius, "smoothing kernel radius")->capture_default_str();
    tr->add_option("--threshold", tr_threshold, "binarization threshold")->capture_default_str();
    tr->add_option("--batch", tr_batch, "inference batch size")->capture_default_str();
    tr->add_option("--threads", tr_threads, "worker threads")->capture_default_str();
    tr->add_option("--dump-activations", tr_dump, "write raw activations as CSV (frame,key,value)");

    // ---- eval ----
    auto* ev = app.add_subcommand("eval", "score estimated MIDI against reference MIDI");
    std::vector<std::string> ev_ref, ev_est;
    std::string ev_out;
    double ev_tol = 0.1;
    ev->add_option("--ref", ev_ref, "reference MIDI (repeatable)")->required();
    ev->add_option("--est", ev_est, "estimated MIDI (repeatable, pairs with --ref)")->required();
    ev->add_option("--tolerance", ev_tol, "onset tolerance in seconds")->capture_default_str();
    ev->add_option("--out", ev_out, "write the CSV report here instead of stdout");

    // ---- gradcheck ----
    auto* gc = app.add_subcommand("gradcheck", "backprop vs central finite differences");
    vpt::ModelConfig gc_cfg{4, 16, 2, 8, 16, 2, 2, 1};
    std::string gc_seed = "0";
    double gc_step = 1e-5, gc_weight = 2.0, gc_tol = 1e-4;
    int gc_batch = 2, gc_threads = 1;
    gc->add_option("--frames", gc_cfg.frames, "clip length")->capture_default_str();
    gc->add_option("--res", gc_cfg.res, "input side")->capture_default_str();
    gc->add_option("--tubelet", gc_cfg.tubelet, "tubelet depth")->capture_default_str();
    gc->add_option("--patch", gc_cfg.patch, "patch size")->capture_default_str();
    gc->add_option("--dim", gc_cfg.dim, "embedding width")->capture_default_str();
    gc->add_option("--layers", gc_cfg.layers, "encoder blocks")->capture_default_str();
    gc->add_option("--heads", gc_cfg.heads, "attention heads")->capture_default_str();
    gc->add_option("--channels", gc_cfg.channels, "input channels")->capture_default_str();
    gc->add_option("--seed", gc_seed, "RNG seed")->capture_default_str();
    gc->add_option("--step", gc_step, "finite-difference step")->capture_default_str();
    gc->add_option("--batch", gc_batch, "batch size")->capture_default_str();
    gc->add_option("--weight", gc_weight, "class weight used in the loss")->capture_default_str();
    gc->add_option("--tol", gc_tol, "max allowed relative error")->capture_default_str();
    gc->add_option("--threads", gc_threads, "worker threads")->capture_default_str();

    // ---- preview ----
    auto* pv = app.add_subcommand("preview", "dump the four square-fit variants of an image");
    std::string pv_image, pv_box, pv_prefix;
    int pv_target = 224;
    pv->add_option("--image", pv_image, "input PPM")->required();
    pv->add_option("--box", pv_box, "optional crop X0,Y0,X1,Y1 before fitting");
    pv->add_option("--out-prefix", pv_prefix, "output path prefix")->required();
    pv->add_option("--target", pv_target, "square side")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*synth) {
            spec.seed = file_seed(synth_seed);
            return run_synth(synth_out, spec, synth_box, synth_notes, synth_ascending,
                             synth_threads);
        }
        if (*train_cmd) {
            if (train_frames != vpt::kWindowLen)
                vpt::fail("window length is fixed at ", vpt::kWindowLen, " frames");
            tc.model.frames = train_frames;
            tc.preproc = train_pf.settings();
            tc.model.res = tc.preproc.target;
            tc.model.channels = tc.preproc.channels();
            tc.seed = file_seed(train_seed);
            tc.checkpoint_path = train_ckpt;
            tc.metrics_csv = train_csv;
            if (!train_jitter.empty()) {
                auto v = parse_int_list(train_jitter, 2, "--jitter");
                tc.jitter_lo = v[0];
                tc.jitter_hi = v[1];
            }
            return run_train(train_dirs, tc);
        }
        if (*tr)
            return run_transcribe(tr_manifest, tr_detections, tr_ckpt, tr_out, tr_drop_last,
                                  tr_sigma, tr_radius, tr_threshold, tr_batch, tr_threads, tr_dump);
        if (*ev) return run_eval(ev_ref, ev_est, ev_tol, ev_out);
        if (*gc)
            return run_gradcheck(gc_cfg, file_seed(gc_seed), gc_step, gc_batch, gc_weight, gc_tol,
                                 gc_threads);
        if (*pv) return run_preview(pv_image, pv_box, pv_prefix, pv_target);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    std::cerr << "error: no subcommand\n";
    return 1;
}
