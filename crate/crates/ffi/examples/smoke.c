/* Build: cc smoke.c -I../include -L../../../target/debug -lblock_gossip_ffi */
#include <stdio.h>
#include <stdlib.h>

#include "block_gossip.h"

int main(void) {
    BgGraph *g = NULL;
    BgCovering *c = NULL;
    if (bg_graph_erdos_renyi(20, 0.5, 1, &g) != BG_STATUS_OK) {
        fprintf(stderr, "graph: %s\n", bg_last_error());
        return 1;
    }
    if (bg_covering_ies(g, &c) != BG_STATUS_OK) {
        fprintf(stderr, "covering: %s\n", bg_last_error());
        return 1;
    }
    BgConstants k;
    double rate;
    bg_covering_constants(c, g, &k);
    bg_gossip_rate_bound(c, g, &rate);

    size_t n = bg_graph_node_count(g), iters = 100;
    double *values = malloc(n * sizeof *values);
    double *errors = malloc((iters + 1) * sizeof *errors);
    for (size_t i = 0; i < n; i++) values[i] = (double)i;
    BgStatus s = bg_gossip_run(g, c, values, BG_NOISE_KIND_CONSISTENT, NULL, iters, 7, errors, NULL);
    if (s != BG_STATUS_OK) {
        fprintf(stderr, "run: %s\n", bg_last_error());
        return 1;
    }
    printf("d = %zu, alpha = %g, beta = %g, rate = %.6f\n", k.block_count, k.alpha, k.beta, rate);
    printf("error %g -> %g after %zu steps\n", errors[0], errors[iters], iters);

    BgGraph *bad = NULL;
    if (bg_graph_erdos_renyi(5, 2.0, 0, &bad) != BG_STATUS_INVALID_PARAMETER) return 1;
    printf("rejected p = 2: %s\n", bg_last_error());

    free(values);
    free(errors);
    bg_covering_free(c);
    bg_graph_free(g);
    return 0;
}
