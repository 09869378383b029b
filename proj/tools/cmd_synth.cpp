#include <iostream>
#include <sstream>

#include "blurmap/synthcam.hpp"
#include "commands.hpp"
#include "common.hpp"

namespace bmtool {

int cmd_synth(const blurmap::RunConfig& cfg, const SynthArgs& args) {
    blurmap::synth::CorpusSpec spec;
    spec.n_real = cfg.n_real;
    spec.n_fake = cfg.n_fake;
    spec.width = cfg.synth_width;
    spec.height = cfg.synth_height;
    spec.layers = cfg.dof_layers;
    spec.seed = cfg.seed;
    spec.cam = cfg.camera_params();

    auto items = blurmap::synth::make_corpus(spec, args.out_dir);

    std::ostringstream manifest;
    for (const auto& item : items) {
        json line = {{"id", item.id},
                     {"label", item.label},
                     {"image", item.image_path},
                     {"gt_blur", item.gt_path}};
        manifest << line.dump() << "\n";
    }
    write_text_atomic(args.out_dir + "/manifest.jsonl", manifest.str());

    std::cout << "wrote " << items.size() << " items -> " << args.out_dir
              << "/manifest.jsonl\n";
    return kExitOk;
}

}  // namespace bmtool
