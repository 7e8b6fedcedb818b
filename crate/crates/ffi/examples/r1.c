/* Solves the two-firm reference market and prints its collusion summary. */
#include <stdio.h>

#include "vertcartel.h"

static int check(VcStatus status) {
    if (status != VC_STATUS_OK) {
        fprintf(stderr, "error %d: %s\n", (int)status, vc_last_error_message());
        return 1;
    }
    return 0;
}

int main(void) {
    const double v[2] = {1.0, 2.0};
    const double c[2] = {0.5, 1.0};
    VcMarket *market = NULL;
    VcEquilibrium *eq = NULL;
    VcCollusion *coll = NULL;
    double prices[2], deltas[2];
    size_t len = 0;
    int64_t binding = -1;

    if (check(vc_market_new(v, c, 2, 1.0, 2.0, &market))) return 1;
    if (check(vc_solve(market, &eq))) return 1;
    if (check(vc_equilibrium_prices(eq, prices, 2, &len))) return 1;
    if (check(vc_collude(market, eq, 1.0, &coll))) return 1;
    if (check(vc_collusion_critical_deltas(coll, deltas, 2, &len))) return 1;
    if (check(vc_collusion_binding_firm(coll, &binding))) return 1;
    printf("nash %.6f %.6f\n", prices[0], prices[1]);
    printf("critical %.6f %.6f\n", deltas[0], deltas[1]);
    printf("binding %lld\n", (long long)binding);

    /* Descending qualities are rejected with a message. */
    const double bad[2] = {2.0, 1.0};
    VcMarket *rejected = NULL;
    VcStatus status = vc_market_new(bad, c, 2, 1.0, 2.0, &rejected);
    printf("rejected %d %s\n", (int)status, vc_last_error_message());

    vc_collusion_free(coll);
    vc_equilibrium_free(eq);
    vc_market_free(market);
    return 0;
}
