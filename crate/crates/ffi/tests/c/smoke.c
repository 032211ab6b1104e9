/* Minimal C consumer: routes the zero mode on the 13-site lattice. */
#include <math.h>
#include <stdio.h>
#include "toporouter.h"

#define CHECK(call)                                                  \
  do {                                                               \
    TrStatus s_ = (call);                                            \
    if (s_ != TR_STATUS_OK) {                                        \
      char msg[256];                                                 \
      tr_last_error_message(msg, sizeof msg);                        \
      fprintf(stderr, "%s failed (%d): %s\n", #call, (int)s_, msg);  \
      return 1;                                                      \
    }                                                                \
  } while (0)

int main(void) {
  TrLattice *lat = NULL;
  CHECK(tr_lattice_new(6, 1.0, 0, &lat));
  size_t l = 0;
  CHECK(tr_lattice_num_sites(lat, &l));
  if (l != 13) return 2;

  double re[13], im[13], energy;
  CHECK(tr_zero_mode(lat, 3.141592653589793, re, im, 13, &energy));
  double a3 = re[4] * re[4] + im[4] * im[4];
  if (fabs(a3 - 1.0 / 6.0) > 1e-9 || fabs(energy) > 1e-10) return 3;

  TrEvolution *ev = NULL;
  TrDisorder d = {TR_DISORDER_KIND_LONG_RANGE, 0.2, 7};
  CHECK(tr_evolve(lat, 0.01, 0.01, &d, &ev));
  double f = 0.0;
  CHECK(tr_evolution_fidelity(ev, &f));
  tr_evolution_free(ev);

  if (tr_lattice_new(5, 1.0, 0, &lat) != TR_STATUS_INVALID_ARGUMENT) return 4;
  tr_lattice_free(lat);
  printf("toporouter %s fidelity %.6f\n", tr_version(), f);
  return 0;
}
