/* Minimal C consumer of the parareal-dae C interface.
 *
 * Build the library first, then compile and link against the static
 * archive (or the shared object with -lparareal_dae_ffi):
 *
 *   cargo build -p parareal-dae-ffi
 *   gcc -std=c11 -Wall -Wextra -I crates/ffi/include crates/ffi/examples/smoke.c \
 *       target/debug/libparareal_dae_ffi.a -lpthread -ldl -lm -o smoke
 *   ./smoke
 */
#include <stdio.h>
#include <stdlib.h>
#include "parareal_dae.h"

#define CHECK(call)                                                        \
    do {                                                                   \
        PrdaeStatus s = (call);                                            \
        if (s != PRDAE_STATUS_OK) {                                        \
            fprintf(stderr, "%s -> %d: %s\n", #call, (int)s,               \
                    prdae_last_error_message());                           \
            return 1;                                                      \
        }                                                                  \
    } while (0)

int main(void) {
    /* The built-in three-component index-2 test model. */
    PrdaeModel *model = NULL;
    CHECK(prdae_model_toy(&model));

    size_t dim = 0;
    CHECK(prdae_model_dim(model, &dim));

    double times[2] = {0.0, 0.05};
    PrdaeIndex index;
    CHECK(prdae_classify_index(model, times, 2, &index));

    /* Consistent initial value, then a windowed parallel-in-time solve. */
    double x0[3] = {0.0, 0.0, 0.3 * 3.14159265358979323846};
    PrdaeRunConfig cfg = prdae_run_config_default(PRDAE_VARIANT_CLASSIC, 1e-3, 5e-4, 1e-10);
    PrdaeRunResult *result = NULL;
    CHECK(prdae_parareal_run(model, x0, 3, 0.0, 0.168, 6, &cfg, &result));

    size_t iterations = 0;
    bool converged = false;
    CHECK(prdae_run_result_iterations(result, &iterations));
    CHECK(prdae_run_result_converged(result, &converged));

    /* Stitch the final fine solves into one trajectory. */
    PrdaeTrajectory *traj = NULL;
    CHECK(prdae_run_result_trajectory(result, model, &traj));
    size_t len = 0;
    CHECK(prdae_trajectory_len(traj, &len));
    const double *t = prdae_trajectory_times(traj);

    printf("dim=%zu index=%d iterations=%zu converged=%d points=%zu t_end=%.6f\n",
           dim, (int)index, iterations, (int)converged, len, t[len - 1]);

    prdae_trajectory_free(traj);
    prdae_run_result_free(result);
    prdae_model_free(model);

    /* Failures return a status and leave a readable message. */
    PrdaeModel *bad = NULL;
    PrdaeStatus s = prdae_model_from_netlist("R broken", &bad);
    if (s != PRDAE_STATUS_PARSE_ERROR || bad != NULL) {
        fprintf(stderr, "expected parse error, got %d\n", (int)s);
        return 1;
    }
    printf("parse error message: %s\n", prdae_last_error_message());
    return 0;
}
