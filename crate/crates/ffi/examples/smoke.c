/* Solves one dispatch on a case file and prints the bus prices.
 *
 *   cc smoke.c -I../include -L<target>/release -lsprlab_ffi -o smoke
 *   ./smoke fig13.json 0 100 150
 */
#include <stdio.h>
#include <stdlib.h>

#include "sprlab.h"

int main(int argc, char **argv) {
    if (argc < 3) {
        fprintf(stderr, "usage: %s CASE.json LOAD...\n", argv[0]);
        return 2;
    }
    SprlabCase *sys = NULL;
    if (sprlab_case_load(argv[1], &sys) != SPRLAB_STATUS_OK) {
        fprintf(stderr, "load failed: %s\n", sprlab_last_error_message());
        return 2;
    }
    size_t n_loads = (size_t)(argc - 2);
    double *loads = malloc(n_loads * sizeof(double));
    for (size_t i = 0; i < n_loads; ++i) {
        loads[i] = strtod(argv[i + 2], NULL);
    }
    size_t nb = sprlab_case_num_buses(sys);
    double *lmp = malloc(nb * sizeof(double));
    SprlabStatus st = sprlab_solve_lmp(sys, loads, n_loads, 0.0, lmp, nb);
    if (st == SPRLAB_STATUS_OK) {
        for (size_t b = 0; b < nb; ++b) {
            printf("bus %zu: %g\n", b + 1, lmp[b]);
        }
    } else {
        fprintf(stderr, "solve failed (%d): %s\n", (int)st, sprlab_last_error_message());
    }
    free(lmp);
    free(loads);
    sprlab_case_free(sys);
    return st == SPRLAB_STATUS_OK ? 0 : 3;
}
