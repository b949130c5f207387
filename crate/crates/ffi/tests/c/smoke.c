#include <math.h>
#include <stdio.h>
#include "ch_apparatus.h"

int main(void) {
    const double pi = 3.14159265358979323846;
    ChApparatus *app = NULL;
    double p = 0.0;
    ChConditionalTable t;
    ChAnalysis a;
    double freqs[4] = {0.25, 0.25, 0.25, 0.25};

    if (ch_apparatus_new_staggered(pi / 3, pi / 6, CH_SETUP_AB, &app) != CH_STATUS_OK) return 1;
    if (ch_apparatus_crossing_probability(app, CH_LINE_A | CH_LINE_B, &p) != CH_STATUS_OK) return 2;
    if (fabs(p - 1.0 / 6) > 1e-12) return 3;
    ch_apparatus_free(app);

    if (ch_apparatus_new_staggered(1.0, 2.0, CH_SETUP_AB, &app) != CH_STATUS_INVALID_ARGUMENT) return 4;
    if (ch_last_error_message() == NULL) return 5;

    if (ch_closed_form_table(pi / 3, pi / 6, &t) != CH_STATUS_OK) return 6;
    if (ch_analyze(&t, freqs, &a) != CH_STATUS_OK) return 7;
    if (fabs(a.corrected_ch + 1.0 / 48) > 1e-12 || !a.naive_violated) return 8;

    puts("ok");
    return 0;
}
