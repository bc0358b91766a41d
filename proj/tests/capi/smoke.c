#include <stdio.h>

#include "simhc/simhc.h"

int main(void) {
  simhc_scene_config cfg;
  simhc_scene* scene = NULL;
  simhc_initializer* init = NULL;
  simhc_solve_options opts;
  simhc_solve_result res;

  if (simhc_scene_config_default(SIMHC_UPNP, &cfg) != SIMHC_OK) return 1;
  cfg.seed = 42;
  if (simhc_scene_generate(&cfg, &scene) != SIMHC_OK) return 1;
  if (simhc_initializer_oracle(7.0, 0.0, 0.0, 0, 42, &init) != SIMHC_OK) return 1;
  simhc_solve_options_default(SIMHC_UPNP, &opts);
  if (simhc_solve(scene, init, &opts, &res) != SIMHC_OK) {
    fprintf(stderr, "solve failed: %s\n", simhc_last_error());
    return 1;
  }
  printf("status=%s rot_err=%.3g deg\n", simhc_track_status_string(res.track_status), res.rot_err_deg);
  simhc_initializer_free(init);
  simhc_scene_free(scene);
  return res.rot_err_deg < 1e-6 ? 0 : 1;
}
