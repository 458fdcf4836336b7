#include "mshoot/integrate.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "mshoot/simd.hpp"

// Stepper layout and coefficients follow DOP853 (Hairer, Norsett & Wanner,
// "Solving ODEs I", 1993): 12-stage 8th-order step, 5th/3rd-order error
// estimators and a 7th-order dense output from three extra stages.

namespace mshoot {

void VectorField::jacobian(const double*, double*) const {
  throw Error("vector field does not provide a Jacobian");
}

void VectorField::eval_jet(const std::vector<Jet>&, std::vector<Jet>&) const {
  throw Error("vector field does not support jet evaluation");
}

void HarmonicField::eval(const double* x, double* dx) const {
  dx[0] = x[1];
  dx[1] = -x[0];
}

void HarmonicField::jacobian(const double*, double* J) const {
  J[0] = 0.0;
  J[1] = 1.0;
  J[2] = -1.0;
  J[3] = 0.0;
}

void HarmonicField::eval_jet(const std::vector<Jet>& x, std::vector<Jet>& dx) const {
  dx.resize(2);
  dx[0] = x[1];
  dx[1] = -x[0];
}

namespace {

thread_local IntegratorStats g_stats;

using Rhs = std::function<void(const double*, double*)>;

namespace c {
constexpr double c2 = 0.526001519587677318785587544488E-01, c3 = 0.789002279381515978178381316732E-01,
                 c4 = 0.118350341907227396726757197510E+00, c5 = 0.281649658092772603273242802490E+00,
                 c6 = 0.333333333333333333333333333333E+00, c7 = 0.25E+00,
                 c8 = 0.307692307692307692307692307692E+00, c9 = 0.651282051282051282051282051282E+00,
                 c10 = 0.6E+00, c11 = 0.857142857142857142857142857142E+00;
constexpr double b1 = 5.42937341165687622380535766363E-2, b6 = 4.45031289275240888144113950566E0,
                 b7 = 1.89151789931450038304281599044E0, b8 = -5.8012039600105847814672114227E0,
                 b9 = 3.1116436695781989440891606237E-1, b10 = -1.52160949662516078556178806805E-1,
                 b11 = 2.01365400804030348374776537501E-1, b12 = 4.47106157277725905176885569043E-2;
constexpr double a21 = 5.26001519587677318785587544488E-2, a31 = 1.97250569845378994544595329183E-2,
                 a32 = 5.91751709536136983633785987549E-2, a41 = 2.95875854768068491816892993775E-2,
                 a43 = 8.87627564304205475450678981324E-2, a51 = 2.41365134159266685502369798665E-1,
                 a53 = -8.84549479328286085344864962717E-1, a54 = 9.24834003261792003115737966543E-1,
                 a61 = 3.7037037037037037037037037037E-2, a64 = 1.70828608729473871279604482173E-1,
                 a65 = 1.25467687566822425016691814123E-1, a71 = 3.7109375E-2,
                 a74 = 1.70252211019544039314978060272E-1, a75 = 6.02165389804559606850219397283E-2,
                 a76 = -1.7578125E-2;
constexpr double a81 = 3.70920001185047927108779319836E-2, a84 = 1.70383925712239993810214054705E-1,
                 a85 = 1.07262030446373284651809199168E-1, a86 = -1.53194377486244017527936158236E-2,
                 a87 = 8.27378916381402288758473766002E-3, a91 = 6.24110958716075717114429577812E-1,
                 a94 = -3.36089262944694129406857109825E0, a95 = -8.68219346841726006818189891453E-1,
                 a96 = 2.75920996994467083049415600797E1, a97 = 2.01540675504778934086186788979E1,
                 a98 = -4.34898841810699588477366255144E1, a101 = 4.77662536438264365890433908527E-1,
                 a104 = -2.48811461997166764192642586468E0, a105 = -5.90290826836842996371446475743E-1,
                 a106 = 2.12300514481811942347288949897E1, a107 = 1.52792336328824235832596922938E1,
                 a108 = -3.32882109689848629194453265587E1, a109 = -2.03312017085086261358222928593E-2;
constexpr double a111 = -9.3714243008598732571704021658E-1, a114 = 5.18637242884406370830023853209E0,
                 a115 = 1.09143734899672957818500254654E0, a116 = -8.14978701074692612513997267357E0,
                 a117 = -1.85200656599969598641566180701E1, a118 = 2.27394870993505042818970056734E1,
                 a119 = 2.49360555267965238987089396762E0, a1110 = -3.0467644718982195003823669022E0,
                 a121 = 2.27331014751653820792359768449E0, a124 = -1.05344954667372501984066689879E1,
                 a125 = -2.00087205822486249909675718444E0, a126 = -1.79589318631187989172765950534E1,
                 a127 = 2.79488845294199600508499808837E1, a128 = -2.85899827713502369474065508674E0,
                 a129 = -8.87285693353062954433549289258E0, a1210 = 1.23605671757943030647266201528E1,
                 a1211 = 6.43392746015763530355970484046E-1;
constexpr double bhh1 = 0.244094488188976377952755905512E+00, bhh2 = 0.733846688281611857341361741547E+00,
                 bhh3 = 0.220588235294117647058823529412E-01;
constexpr double er1 = 0.1312004499419488073250102996E-01, er6 = -0.1225156446376204440720569753E+01,
                 er7 = -0.4957589496572501915214079952E+00, er8 = 0.1664377182454986536961530415E+01,
                 er9 = -0.3503288487499736816886487290E+00, er10 = 0.3341791187130174790297318841E+00,
                 er11 = 0.8192320648511571246570742613E-01, er12 = -0.2235530786388629525884427845E-01;
constexpr double a141 = 5.61675022830479523392909219681E-2, a147 = 2.53500210216624811088794765333E-1,
                 a148 = -2.46239037470802489917441475441E-1, a149 = -1.24191423263816360469010140626E-1,
                 a1410 = 1.5329179827876569731206322685E-1, a1411 = 8.20105229563468988491666602057E-3,
                 a1412 = 7.56789766054569976138603589584E-3, a1413 = -8.298E-3;
constexpr double a151 = 3.18346481635021405060768473261E-2, a156 = 2.83009096723667755288322961402E-2,
                 a157 = 5.35419883074385676223797384372E-2, a158 = -5.49237485713909884646569340306E-2,
                 a1511 = -1.08347328697249322858509316994E-4, a1512 = 3.82571090835658412954920192323E-4,
                 a1513 = -3.40465008687404560802977114492E-4, a1514 = 1.41312443674632500278074618366E-1;
constexpr double a161 = -4.28896301583791923408573538692E-1, a166 = -4.69762141536116384314449447206E0,
                 a167 = 7.68342119606259904184240953878E0, a168 = 4.06898981839711007970213554331E0,
                 a169 = 3.56727187455281109270669543021E-1, a1613 = -1.39902416515901462129418009734E-3,
                 a1614 = 2.9475147891527723389556272149E0, a1615 = -9.15095847217987001081870187138E0;
constexpr double d41 = -0.84289382761090128651353491142E+01, d46 = 0.56671495351937776962531783590E+00,
                 d47 = -0.30689499459498916912797304727E+01, d48 = 0.23846676565120698287728149680E+01,
                 d49 = 0.21170345824450282767155149946E+01, d410 = -0.87139158377797299206789907490E+00,
                 d411 = 0.22404374302607882758541771650E+01, d412 = 0.63157877876946881815570249290E+00,
                 d413 = -0.88990336451333310820698117400E-01, d414 = 0.18148505520854727256656404962E+02,
                 d415 = -0.91946323924783554000451984436E+01, d416 = -0.44360363875948939664310572000E+01;
constexpr double d51 = 0.10427508642579134603413151009E+02, d56 = 0.24228349177525818288430175319E+03,
                 d57 = 0.16520045171727028198505394887E+03, d58 = -0.37454675472269020279518312152E+03,
                 d59 = -0.22113666853125306036270938578E+02, d510 = 0.77334326684722638389603898808E+01,
                 d511 = -0.30674084731089398182061213626E+02, d512 = -0.93321305264302278729567221706E+01,
                 d513 = 0.15697238121770843886131091075E+02, d514 = -0.31139403219565177677282850411E+02,
                 d515 = -0.93529243588444783865713862664E+01, d516 = 0.35816841486394083752465898540E+02;
constexpr double d61 = 0.19985053242002433820987653617E+02, d66 = -0.38703730874935176555105901742E+03,
                 d67 = -0.18917813819516756882830838328E+03, d68 = 0.52780815920542364900561016686E+03,
                 d69 = -0.11573902539959630126141871134E+02, d610 = 0.68812326946963000169666922661E+01,
                 d611 = -0.10006050966910838403183860980E+01, d612 = 0.77771377980534432092869265740E+00,
                 d613 = -0.27782057523535084065932004339E+01, d614 = -0.60196695231264120758267380846E+02,
                 d615 = 0.84320405506677161018159903784E+02, d616 = 0.11992291136182789328035130030E+02;
constexpr double d71 = -0.25693933462703749003312586129E+02, d76 = -0.15418974869023643374053993627E+03,
                 d77 = -0.23152937917604549567536039109E+03, d78 = 0.35763911791061412378285349910E+03,
                 d79 = 0.93405324183624310003907691704E+02, d710 = -0.37458323136451633156875139351E+02,
                 d711 = 0.10409964950896230045147246184E+03, d712 = 0.29840293426660503123344363579E+02,
                 d713 = -0.43533456590011143754432175058E+02, d714 = 0.96324553959188282948394950600E+02,
                 d715 = -0.39177261675615439165231486172E+02, d716 = -0.14972683625798562581422125276E+03;
}  // namespace c

class Dop853 {
 public:
  using Observer = std::function<bool(Dop853&)>;

  Dop853(std::size_t n, Rhs f, const Tolerances& tol)
      : n_(n), f_(std::move(f)), tol_(tol), buf_(25 * n, 0.0) {
    double* p = buf_.data();
    for (double** q : {&w_, &ww1_, &k1_, &k2_, &k3_, &k4_, &k5_, &k6_, &k7_, &k8_, &k9_, &k10_, &rc1_, &rc2_,
                       &rc3_, &rc4_, &rc5_, &rc6_, &rc7_, &rc8_, &zero_, &ynew_, &tmp_, &comp_, &compnew_}) {
      *q = p;
      p += n;
    }
  }

  /// Integrates y over [0, T], T > 0. Stops early if the observer returns true.
  void run(double* y, double T, const Observer& obs) {
    std::memcpy(w_, y, n_ * sizeof(double));
    std::fill(comp_, comp_ + n_, 0.0);
    t_ = 0.0;
    const double hmax = T;
    const double facc1 = 1.0 / fac1_, facc2 = 1.0 / fac2_, expo1 = 1.0 / 8.0;
    double facold = 1e-4;
    bool last = false, reject = false;
    try {
      eval(w_, k1_);
    } catch (const Error& e) {
      fail(std::string("integrator: field evaluation failed at start: ") + e.what());
    }
    double h = hinit(hmax);
    long nstep = 0;
    std::string last_fail;
    while (true) {
      if (nstep > tol_.max_steps) fail("integrator: maximum number of steps exceeded");
      if (0.1 * std::abs(h) <= std::abs(t_) * kUround || h < 1e-300)
        fail("integrator: step size underflow" + (last_fail.empty() ? std::string() : " (" + last_fail + ")"));
      if (t_ + 1.01 * h - T > 0.0) {
        h = T - t_;
        last = true;
      }
      ++nstep;
      ++g_stats.steps;
      double err;
      try {
        step12(h);
        err = std::abs(h) * error_estimation();
      } catch (const Error& e) {
        last_fail = e.what();
        err = NAN;
      }
      if (!std::isfinite(err)) {
        h *= 0.25;
        reject = true;
        last = false;
        ++g_stats.rejected;
        continue;
      }
      const double fac11 = std::pow(err, expo1);
      const double fac = std::max(facc2, std::min(facc1, fac11 / safe_));
      double hnew = h / fac;
      if (err <= 1.0) {
        facold = std::max(err, 1e-4);
        (void)facold;
        try {
          eval(ynew_, k4_);
        } catch (const Error& e) {
          last_fail = e.what();
          h *= 0.25;
          reject = true;
          last = false;
          continue;
        }
        told_ = t_;
        tnew_ = (last ? T : t_ + h);
        h_ = h;
        dense_ready_ = false;
        const bool stop = obs ? obs(*this) : false;
        std::memcpy(k1_, k4_, n_ * sizeof(double));
        std::memcpy(w_, ynew_, n_ * sizeof(double));
        std::memcpy(comp_, compnew_, n_ * sizeof(double));
        t_ = tnew_;
        if (stop || last) {
          std::memcpy(y, w_, n_ * sizeof(double));
          return;
        }
        if (std::abs(hnew) > hmax) hnew = hmax;
        if (reject) hnew = std::min(std::abs(hnew), std::abs(h));
        reject = false;
      } else {
        hnew = h / std::min(facc1, fac11 / safe_);
        reject = true;
        last = false;
        ++g_stats.rejected;
      }
      h = hnew;
    }
  }

  double t_old() const { return told_; }
  double t_new() const { return tnew_; }
  const double* y_old() const { return w_; }
  const double* y_new() const { return ynew_; }
  std::size_t size() const { return n_; }

  /// 7th-order interpolant on the current accepted step.
  void dense(double tau, double* out) {
    if (!dense_ready_) {
      dense_output();
      dense_ready_ = true;
    }
    const double s = (tau - told_) / h_, s1 = 1.0 - s;
    for (std::size_t i = 0; i < n_; ++i)
      out[i] = rc1_[i] +
               s * (rc2_[i] +
                    s1 * (rc3_[i] + s * (rc4_[i] + s1 * (rc5_[i] + s * (rc6_[i] + s1 * (rc7_[i] + s * rc8_[i]))))));
  }

 private:
  static constexpr double kUround = 2.3e-16;

  [[noreturn]] void fail(const std::string& what) const {
    throw IntegrationError(what, t_, std::vector<double>(w_, w_ + n_));
  }

  void eval(const double* y, double* dy) {
    f_(y, dy);
    ++g_stats.evaluations;
  }

  template <std::size_t K>
  void combo(double* out, const double* base, double h, const double (&coef)[K], const double* const (&v)[K]) {
    simd::active().lincomb(out, base, h, coef, v, K, n_);
  }

  void step12(double h) {
    using namespace c;
    combo(ww1_, w_, h, {a21}, {k1_});
    eval(ww1_, k2_);
    combo(ww1_, w_, h, {a31, a32}, {k1_, k2_});
    eval(ww1_, k3_);
    combo(ww1_, w_, h, {a41, a43}, {k1_, k3_});
    eval(ww1_, k4_);
    combo(ww1_, w_, h, {a51, a53, a54}, {k1_, k3_, k4_});
    eval(ww1_, k5_);
    combo(ww1_, w_, h, {a61, a64, a65}, {k1_, k4_, k5_});
    eval(ww1_, k6_);
    combo(ww1_, w_, h, {a71, a74, a75, a76}, {k1_, k4_, k5_, k6_});
    eval(ww1_, k7_);
    combo(ww1_, w_, h, {a81, a84, a85, a86, a87}, {k1_, k4_, k5_, k6_, k7_});
    eval(ww1_, k8_);
    combo(ww1_, w_, h, {a91, a94, a95, a96, a97, a98}, {k1_, k4_, k5_, k6_, k7_, k8_});
    eval(ww1_, k9_);
    combo(ww1_, w_, h, {a101, a104, a105, a106, a107, a108, a109}, {k1_, k4_, k5_, k6_, k7_, k8_, k9_});
    eval(ww1_, k10_);
    combo(ww1_, w_, h, {a111, a114, a115, a116, a117, a118, a119, a1110},
          {k1_, k4_, k5_, k6_, k7_, k8_, k9_, k10_});
    eval(ww1_, k2_);
    combo(ww1_, w_, h, {a121, a124, a125, a126, a127, a128, a129, a1210, a1211},
          {k1_, k4_, k5_, k6_, k7_, k8_, k9_, k10_, k2_});
    eval(ww1_, k3_);
    combo(k4_, zero_, 1.0, {b1, b6, b7, b8, b9, b10, b11, b12}, {k1_, k6_, k7_, k8_, k9_, k10_, k2_, k3_});
    // Compensated update: the low-order bits of each increment carry to the next step.
    for (std::size_t i = 0; i < n_; ++i) {
      const double d = h * k4_[i] + comp_[i];
      ynew_[i] = w_[i] + d;
      compnew_[i] = d - (ynew_[i] - w_[i]);
    }
    // k5 keeps its stage value for the error estimate; ynew holds the step result.
  }

  double error_estimation() const {
    using namespace c;
    double err = 0.0, err2 = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      const double sk = 1.0 / (tol_.abs + tol_.rel * std::max(std::abs(w_[i]), std::abs(ynew_[i])));
      double sqr = (k4_[i] - bhh1 * k1_[i] - bhh2 * k9_[i] - bhh3 * k3_[i]) * sk;
      err2 += sqr * sqr;
      sqr = (er1 * k1_[i] + er6 * k6_[i] + er7 * k7_[i] + er8 * k8_[i] + er9 * k9_[i] + er10 * k10_[i] +
             er11 * k2_[i] + er12 * k3_[i]) *
            sk;
      err += sqr * sqr;
    }
    const double deno = err + 0.01 * err2;
    return err * std::sqrt(1.0 / (deno <= 0.0 ? n_ : deno * n_));
  }

  void dense_output() {
    using namespace c;
    const double h = h_;
    for (std::size_t i = 0; i < n_; ++i) {
      rc1_[i] = w_[i];
      const double ydiff = ynew_[i] - w_[i];
      rc2_[i] = ydiff;
      const double bspl = h * k1_[i] - ydiff;
      rc3_[i] = bspl;
      rc4_[i] = ydiff - h * k4_[i] - bspl;
      rc5_[i] = d41 * k1_[i] + d46 * k6_[i] + d47 * k7_[i] + d48 * k8_[i] + d49 * k9_[i] + d410 * k10_[i] +
                d411 * k2_[i] + d412 * k3_[i];
      rc6_[i] = d51 * k1_[i] + d56 * k6_[i] + d57 * k7_[i] + d58 * k8_[i] + d59 * k9_[i] + d510 * k10_[i] +
                d511 * k2_[i] + d512 * k3_[i];
      rc7_[i] = d61 * k1_[i] + d66 * k6_[i] + d67 * k7_[i] + d68 * k8_[i] + d69 * k9_[i] + d610 * k10_[i] +
                d611 * k2_[i] + d612 * k3_[i];
      rc8_[i] = d71 * k1_[i] + d76 * k6_[i] + d77 * k7_[i] + d78 * k8_[i] + d79 * k9_[i] + d710 * k10_[i] +
                d711 * k2_[i] + d712 * k3_[i];
    }
    combo(ww1_, w_, h, {a141, a147, a148, a149, a1410, a1411, a1412, a1413},
          {k1_, k7_, k8_, k9_, k10_, k2_, k3_, k4_});
    eval(ww1_, k10_);
    combo(ww1_, w_, h, {a151, a156, a157, a158, a1511, a1512, a1513, a1514},
          {k1_, k6_, k7_, k8_, k2_, k3_, k4_, k10_});
    eval(ww1_, k2_);
    combo(ww1_, w_, h, {a161, a166, a167, a168, a169, a1613, a1614, a1615},
          {k1_, k6_, k7_, k8_, k9_, k4_, k10_, k2_});
    eval(ww1_, k3_);
    for (std::size_t i = 0; i < n_; ++i) {
      rc5_[i] = h * (rc5_[i] + d413 * k4_[i] + d414 * k10_[i] + d415 * k2_[i] + d416 * k3_[i]);
      rc6_[i] = h * (rc6_[i] + d513 * k4_[i] + d514 * k10_[i] + d515 * k2_[i] + d516 * k3_[i]);
      rc7_[i] = h * (rc7_[i] + d613 * k4_[i] + d614 * k10_[i] + d615 * k2_[i] + d616 * k3_[i]);
      rc8_[i] = h * (rc8_[i] + d713 * k4_[i] + d714 * k10_[i] + d715 * k2_[i] + d716 * k3_[i]);
    }
  }

  double hinit(double hmax) {
    double dnf = 0.0, dny = 0.0, der2 = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      const double sk = tol_.abs + tol_.rel * std::abs(w_[i]);
      double sqr = k1_[i] / sk;
      dnf += sqr * sqr;
      sqr = w_[i] / sk;
      dny += sqr * sqr;
    }
    double h = std::min((dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : std::sqrt(dny / dnf) * 0.01, hmax);
    for (std::size_t i = 0; i < n_; ++i) ww1_[i] = w_[i] + h * k1_[i];
    try {
      eval(ww1_, k2_);
    } catch (const Error&) {
      return std::min(h * 1e-3, hmax);
    }
    for (std::size_t i = 0; i < n_; ++i) {
      const double sqr = (k2_[i] - k1_[i]) / (tol_.abs + tol_.rel * std::abs(w_[i]));
      der2 += sqr * sqr;
    }
    der2 = std::sqrt(der2) / h;
    const double der12 = std::max(std::abs(der2), std::sqrt(dnf));
    const double h1 = der12 <= 1e-15 ? std::max(1e-6, std::abs(h) * 1e-3) : std::pow(0.01 / der12, 0.125);
    return std::min(100.0 * std::abs(h), std::min(h1, hmax));
  }

  std::size_t n_;
  Rhs f_;
  Tolerances tol_;
  std::vector<double> buf_;
  double *w_, *ww1_, *k1_, *k2_, *k3_, *k4_, *k5_, *k6_, *k7_, *k8_, *k9_, *k10_;
  double *rc1_, *rc2_, *rc3_, *rc4_, *rc5_, *rc6_, *rc7_, *rc8_, *zero_, *ynew_, *tmp_, *comp_, *compnew_;
  double t_ = 0.0, told_ = 0.0, tnew_ = 0.0, h_ = 0.0;
  bool dense_ready_ = false;
  const double fac1_ = 1.0 / 3.0, fac2_ = 6.0, safe_ = 0.9;
};

// Field evaluation with optional time reversal.
Rhs state_rhs(const VectorField& field, double sign) {
  const std::size_t n = field.dimension();
  return [&field, sign, n](const double* y, double* dy) {
    field.eval(y, dy);
    if (sign < 0)
      for (std::size_t i = 0; i < n; ++i) dy[i] = -dy[i];
  };
}

void rethrow_signed(const IntegrationError& e, double sign, std::size_t keep) {
  std::vector<double> s = e.state();
  if (s.size() > keep) s.resize(keep);
  throw IntegrationError(e.what(), sign * e.time(), std::move(s));
}

std::vector<double> mat_identity(std::size_t n) {
  std::vector<double> I(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) I[i * n + i] = 1.0;
  return I;
}

}  // namespace

IntegratorStats last_integrator_stats() { return g_stats; }

std::vector<double> integrate_time(const VectorField& field, const std::vector<double>& x0, double t,
                                   const Tolerances& tol) {
  const std::size_t n = field.dimension();
  if (x0.size() != n) throw DimensionError("integrate_time: state has wrong dimension");
  if (!std::isfinite(t)) throw Error("integrate_time: non-finite time");
  g_stats = {};
  if (t == 0.0) return x0;
  const double sign = t > 0 ? 1.0 : -1.0;
  std::vector<double> y = x0;
  Dop853 stepper(n, state_rhs(field, sign), tol);
  try {
    stepper.run(y.data(), std::abs(t), nullptr);
  } catch (const IntegrationError& e) {
    rethrow_signed(e, sign, n);
  }
  return y;
}

Vec4 integrate_time(const VectorField& field, const Vec4& x0, double t, const Tolerances& tol) {
  const auto y = integrate_time(field, std::vector<double>(x0.begin(), x0.end()), t, tol);
  return {y[0], y[1], y[2], y[3]};
}

StmResult integrate_with_stm(const VectorField& field, const std::vector<double>& x0, double t,
                             const Tolerances& tol) {
  const std::size_t n = field.dimension();
  if (x0.size() != n) throw DimensionError("integrate_with_stm: state has wrong dimension");
  if (!field.has_jacobian()) throw Error("integrate_with_stm: field has no analytic Jacobian");
  g_stats = {};
  if (t == 0.0) return {x0, mat_identity(n)};
  const double sign = t > 0 ? 1.0 : -1.0;
  std::vector<double> y(n + n * n);
  std::copy(x0.begin(), x0.end(), y.begin());
  const auto I = mat_identity(n);
  std::copy(I.begin(), I.end(), y.begin() + n);
  Rhs rhs = [&field, sign, n](const double* z, double* dz) {
    thread_local std::vector<double> J;
    J.resize(n * n);
    field.eval(z, dz);
    field.jacobian(z, J.data());
    const double* P = z + n;
    double* dP = dz + n;
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t col = 0; col < n; ++col) {
        double s = 0.0;
        for (std::size_t k = 0; k < n; ++k) s += J[r * n + k] * P[k * n + col];
        dP[r * n + col] = s;
      }
    if (sign < 0)
      for (std::size_t i = 0; i < n + n * n; ++i) dz[i] = -dz[i];
  };
  Dop853 stepper(n + n * n, rhs, tol);
  try {
    stepper.run(y.data(), std::abs(t), nullptr);
  } catch (const IntegrationError& e) {
    rethrow_signed(e, sign, n);
  }
  return {std::vector<double>(y.begin(), y.begin() + n), std::vector<double>(y.begin() + n, y.end())};
}

std::pair<Vec4, Mat4> integrate_with_stm(const VectorField& field, const Vec4& x0, double t,
                                         const Tolerances& tol) {
  if (field.dimension() != 4) throw DimensionError("integrate_with_stm: 4D overload needs a 4D field");
  const auto r = integrate_with_stm(field, std::vector<double>(x0.begin(), x0.end()), t, tol);
  Mat4 M;
  std::copy(r.stm.begin(), r.stm.end(), M.a.begin());
  return {{r.state[0], r.state[1], r.state[2], r.state[3]}, M};
}

EventRecord integrate_to_event(const VectorField& field, const std::vector<double>& x0, const EventSpec& ev,
                               bool forward, const Tolerances& tol) {
  const std::size_t n = field.dimension();
  if (x0.size() != n) throw DimensionError("integrate_to_event: state has wrong dimension");
  if (!(ev.max_time > 0.0)) throw Error("integrate_to_event: max_time must be positive");
  if (!ev.sigma) throw Error("integrate_to_event: event has no sigma");
  g_stats = {};
  const double sign = forward ? 1.0 : -1.0;
  // Sign of sigma' along the integration direction required at the crossing.
  Direction dir = ev.direction;
  if (!forward && dir == Direction::increasing)
    dir = Direction::decreasing;
  else if (!forward && dir == Direction::decreasing)
    dir = Direction::increasing;

  auto crosses = [dir](double sa, double sb) {
    const bool up = sa < 0.0 && sb >= 0.0;
    const bool down = sa > 0.0 && sb <= 0.0;
    if (dir == Direction::increasing) return up;
    if (dir == Direction::decreasing) return down;
    return up || down;
  };

  const double sigma0 = ev.sigma(x0.data());
  const bool on_section = std::abs(sigma0) <= ev.tol;
  std::optional<EventRecord> found;
  std::vector<double> ya(n), yb(n), yc(n);
  double prev_tau = 0.0, prev_sigma = sigma0;

  Dop853::Observer obs = [&](Dop853& st) -> bool {
    const double t0 = st.t_old(), t1 = st.t_new();
    for (int i = 1; i <= 5; ++i) {
      const double tb = (i == 5) ? t1 : t0 + (t1 - t0) * i / 5.0;
      if (i == 5)
        std::copy(st.y_new(), st.y_new() + n, yb.begin());
      else
        st.dense(tb, yb.data());
      const double sb = ev.sigma(yb.data());
      const double ta = prev_tau, sa = prev_sigma;
      prev_tau = tb;
      prev_sigma = sb;
      if (!crosses(sa, sb)) continue;
      // Illinois-modified regula falsi on the dense output.
      double a = ta, fa = sa, b = tb, fb = sb;
      double root = tb;
      std::vector<double>& yr = yc;
      std::copy(yb.begin(), yb.end(), yr.begin());
      double froot = fb;
      int side = 0;
      for (int it = 0; it < 200; ++it) {
        double cpt = b - fb * (b - a) / (fb - fa);
        if (!(cpt > a && cpt < b)) cpt = 0.5 * (a + b);
        st.dense(cpt, yr.data());
        const double fc = ev.sigma(yr.data());
        root = cpt;
        froot = fc;
        if (std::abs(fc) <= 0.25 * ev.tol) break;
        if ((fc < 0.0) == (fb < 0.0)) {
          b = cpt;
          fb = fc;
          if (side == -1) fa *= 0.5;
          side = -1;
        } else {
          a = cpt;
          fa = fc;
          if (side == 1) fb *= 0.5;
          side = 1;
        }
        if (b - a <= 4e-16 * std::max(1.0, std::abs(b))) break;
      }
      if (on_section && root < ev.exclusion) continue;
      // Polish with short exact integrations when the interpolant falls short.
      double t_signed = sign * root;
      std::vector<double> state = yr;
      double s = froot;
      for (int it = 0; it < 4 && std::abs(s) > ev.tol && ev.sigma_dot; ++it) {
        const double sd = ev.sigma_dot(state.data());
        if (sd == 0.0) break;
        const double dt = -s / sd;
        state = integrate_time(field, state, dt, tol);
        t_signed += dt;
        s = ev.sigma(state.data());
      }
      if (ev.extra_test && !ev.extra_test(state.data())) continue;
      found = EventRecord{t_signed, std::move(state), std::abs(s)};
      return true;
    }
    return false;
  };

  std::vector<double> y = x0;
  Dop853 stepper(n, state_rhs(field, sign), tol);
  try {
    stepper.run(y.data(), ev.max_time, obs);
  } catch (const IntegrationError& e) {
    rethrow_signed(e, sign, n);
  }
  if (!found) throw EventNotFound("integrate_to_event: no section crossing within max_time");
  return *found;
}

std::vector<Jet> flow_jet(const VectorField& field, const std::vector<Jet>& j0, double t, const Tolerances& tol) {
  const std::size_t n = field.dimension();
  if (j0.size() != n) throw DimensionError("flow_jet: jet state has wrong dimension");
  if (!field.has_jet()) throw Error("flow_jet: field does not support jets");
  const int d = j0[0].degree();
  for (const Jet& j : j0)
    if (j.degree() != d) throw DimensionError("flow_jet: components have different degrees");
  g_stats = {};
  if (t == 0.0) return j0;
  const std::size_t w = d + 1;
  const double sign = t > 0 ? 1.0 : -1.0;
  std::vector<double> y(n * w);
  for (std::size_t i = 0; i < n; ++i) std::copy(j0[i].coeffs().begin(), j0[i].coeffs().end(), y.begin() + i * w);
  Rhs rhs = [&field, sign, n, w, d](const double* z, double* dz) {
    thread_local std::vector<Jet> x, dx;
    x.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (x[i].degree() != d) x[i] = Jet(d);
      std::copy(z + i * w, z + (i + 1) * w, x[i].data());
    }
    try {
      field.eval_jet(x, dx);
    } catch (const SingularityError& e) {
      throw SingularityError(std::string("flow_jet: ") + e.what());
    }
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < w; ++j) dz[i * w + j] = sign * dx[i][static_cast<int>(j)];
  };
  Dop853 stepper(n * w, rhs, tol);
  try {
    stepper.run(y.data(), std::abs(t), nullptr);
  } catch (const IntegrationError& e) {
    throw IntegrationError(e.what(), sign * e.time(), e.state());
  }
  std::vector<Jet> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.emplace_back(std::vector<double>(y.begin() + i * w, y.begin() + (i + 1) * w));
  return out;
}

JetState flow_jet(const VectorField& field, const JetState& j0, double t, const Tolerances& tol) {
  j0.check();
  const auto out = flow_jet(field, std::vector<Jet>(j0.c.begin(), j0.c.end()), t, tol);
  return JetState(out[0], out[1], out[2], out[3]);
}

}  // namespace mshoot
