#include <stdio.h>
#include <math.h>
#include "vtolctrl.h"

int main(void) {
    VtolModel *model = vtol_model_level();
    if (vtol_model_states(model) != 4) return 1;

    double q[4] = {1.0, 0.01, 0.01, 10.0};
    double r[1] = {1.0};
    VtolGain *gain = NULL;
    if (vtol_synth_lqr(model, q, 4, r, 1, &gain) != VTOL_OK) return 2;
    if (!vtol_gain_certified(gain)) return 3;

    double x0[4] = {0.0, 0.0, 0.0, 0.5};
    VtolTrace *trace = NULL;
    if (vtol_simulate(model, gain, x0, 4, 0.002, 5.0, 1, 1, &trace) != VTOL_OK) return 4;
    double rms = vtol_trace_rms(trace, 3);
    printf("q rms = %.6f (abscissa %.3e)\n", rms, vtol_gain_spectral_abscissa(gain));
    if (!(rms > 0.0 && rms < 1.0)) return 5;

    vtol_trace_free(trace);
    vtol_gain_free(gain);
    vtol_model_free(model);
    return 0;
}
