#include "commands.hpp"

#include "sinevid/errors.hpp"
#include "sinevid/runtime.hpp"

#include "CLI11.hpp"

#include <iostream>

using namespace sinevid::cli;

namespace {

void add_common(CLI::App* cmd, CommonArgs& common, bool items)
{
    cmd->add_option("-o,--out", common.out, "Run directory for every output")->required();
    cmd->add_flag("-q,--quiet", common.quiet, "Only print errors and reports");
    if (items) {
        cmd->add_option("-j,--jobs", common.jobs, "Items processed in parallel")->check(CLI::PositiveNumber);
        cmd->add_flag("--continue-on-error", common.continue_on_error,
                      "Keep going after a failed item; exit 1 with a summary");
    }
}

void add_inputs(CLI::App* cmd, InputArgs& in, bool positional)
{
    if (positional)
        cmd->add_option("videos", in.paths, "Videos (.rawvid files or PGM directories)");
    cmd->add_option("--corpus", in.corpus, "Corpus manifest (manifest.tsv)");
    cmd->add_option("--split", in.split, "Manifest split to use: train, test or all");
    cmd->add_option("--height", in.height, "Resize inputs to this height");
    cmd->add_option("--width", in.width, "Resize inputs to this width");
}

void add_encode_flags(CLI::App* cmd, EncodeFlags& f)
{
    cmd->add_option("--config", f.config, "Training config supplying batch_frames, inner_steps, inner_lr");
    cmd->add_option("--batch-frames", f.batch_frames, "Frames per encoding batch (b)");
    cmd->add_option("--inner-steps", f.inner_steps, "Inner-loop steps per batch (G)");
    cmd->add_option("--inner-lr", f.inner_lr, "Inner-loop learning rate");
}

} // namespace

int main(int argc, char** argv)
{
    sinevid::keep_freed_memory();
    CLI::App app{"Meta-learned modulated SIREN video codec"};
    app.require_subcommand(1);

    CommonArgs common;
    for (int i = 1; i < argc; ++i)
        common.arguments.emplace_back(argv[i]);

    GenCorpusArgs gen;
    auto* gen_cmd = app.add_subcommand("gen-corpus", "Generate a synthetic labeled corpus");
    add_common(gen_cmd, common, false);
    gen_cmd->add_option("--spec", gen.spec, "Corpus spec file (key = value)");
    gen_cmd->add_option("--count", gen.count, "Number of videos")->check(CLI::PositiveNumber);
    gen_cmd->add_option("--seed", gen.seed, "Corpus seed");

    InputArgs train_in;
    train_in.split = "train";
    TrainArgs train;
    auto* train_cmd = app.add_subcommand("train", "Meta-train the shared model");
    add_common(train_cmd, common, false);
    add_inputs(train_cmd, train_in, true);
    train_cmd->add_option("-c,--config", train.config, "Training config")->required();
    train_cmd->add_option("--resume", train.resume, "Continue from a checkpoint");
    train_cmd->add_option("--validate", train.validate, "Held-out video for validation PSNR");

    InputArgs enc_in;
    EncodeArgs enc;
    auto* enc_cmd = app.add_subcommand("encode", "Encode videos into .venc files");
    add_common(enc_cmd, common, true);
    add_inputs(enc_cmd, enc_in, true);
    enc_cmd->add_option("-m,--model", enc.model, "Trained model (.snet)")->required();
    add_encode_flags(enc_cmd, enc.flags);
    enc_cmd->add_flag("--report", enc.report, "Print PSNR/SSIM3D of each reconstruction");

    DecodeArgs dec;
    auto* dec_cmd = app.add_subcommand("decode", "Reconstruct videos from .venc files");
    add_common(dec_cmd, common, true);
    dec_cmd->add_option("encodings", dec.encodings, "Encodings (.venc)")->required();
    dec_cmd->add_option("-m,--model", dec.model, "Trained model (.snet)")->required();
    dec_cmd->add_option("--reference", dec.references, "Ground-truth video per encoding, in order")
        ->allow_extra_args(false);
    dec_cmd->add_flag("--report", dec.report, "Print PSNR/SSIM3D against --reference");
    dec_cmd->add_flag("--pgm", dec.pgm, "Write PGM frame directories instead of .rawvid");

    SummaryArgs sum;
    auto* sum_cmd = app.add_subcommand("summary", "Render the static summary frame (phi = 0)");
    add_common(sum_cmd, common, true);
    sum_cmd->add_option("encodings", sum.encodings, "Encodings (.venc)")->required();
    sum_cmd->add_option("-m,--model", sum.model, "Trained model (.snet)")->required();

    InputArgs eval_in;
    EvalArgs eval;
    std::string modes = "v,phi,combined";
    auto* eval_cmd = app.add_subcommand("eval", "Train and evaluate downstream heads on modulations");
    add_common(eval_cmd, common, true);
    add_inputs(eval_cmd, eval_in, false);
    eval_cmd->add_option("-m,--model", eval.model, "Trained model (.snet)")->required();
    add_encode_flags(eval_cmd, eval.flags);
    eval_cmd->add_option("--task", eval.task, "regression (blob speed) or binary (trajectory)");
    eval_cmd->add_option("--modes", modes, "Comma-separated feature modes: v, phi, combined");
    eval_cmd->add_option("--seeds", eval.seeds, "Head seeds; prints mean ± std over them");
    eval_cmd->add_option("--seed", eval.seed, "First head seed");
    eval_cmd->add_option("--epochs", eval.epochs, "Head training epochs");
    eval_cmd->add_option("--hidden", eval.hidden, "Hidden widths")->delimiter(',')->allow_extra_args(false);
    eval_cmd->add_option("--dropout", eval.dropout, "Dropout rate");
    eval_cmd->add_option("--lr", eval.lr, "Head learning rate");
    eval_cmd->add_option("--batch-size", eval.batch_size, "Head minibatch size");
    eval_cmd->add_flag("--shuffle-labels", eval.shuffle_labels, "Permute training labels (chance control)");

    GradcheckArgs gc;
    auto* gc_cmd = app.add_subcommand("gradcheck", "Compare reverse-mode gradients with finite differences");
    add_common(gc_cmd, common, false);
    gc_cmd->add_option("--trials", gc.trials, "Seeded trials");
    gc_cmd->add_option("--seed", gc.seed, "Base seed");
    gc_cmd->add_option("--step", gc.step, "Central-difference step");
    gc_cmd->add_option("--tolerance", gc.tolerance, "Maximum norm-wise relative error");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*gen_cmd)
            return cmd_gen_corpus(common, gen);
        if (*train_cmd)
            return cmd_train(common, train_in, train);
        if (*enc_cmd)
            return cmd_encode(common, enc_in, enc);
        if (*dec_cmd)
            return cmd_decode(common, dec);
        if (*sum_cmd)
            return cmd_summary(common, sum);
        if (*eval_cmd) {
            eval.modes.clear();
            std::size_t pos = 0;
            while (pos <= modes.size()) {
                const auto comma = std::min(modes.find(',', pos), modes.size());
                if (comma > pos)
                    eval.modes.push_back(modes.substr(pos, comma - pos));
                pos = comma + 1;
            }
            return cmd_eval(common, eval_in, eval);
        }
        if (*gc_cmd)
            return cmd_gradcheck(common, gc);
    } catch (const sinevid::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    return kExitUsage;
}
