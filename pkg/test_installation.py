#!/usr/bin/env python3
"""
Installation check for SpatialFDR
"""

def test_import():
    """Test basic imports"""
    print("Testing imports...")
    try:
        import SpatialFDR
        from SpatialFDR_cli import fdrl_cli  # noqa: F401
        print(f"  SpatialFDR {SpatialFDR.__version__} imported successfully")
        return True
    except ImportError as e:
        print(f"  Failed to import SpatialFDR: {e}")
        return False

def test_defaults():
    """Test default configuration"""
    print("\nChecking default configuration...")
    try:
        from SpatialFDR import fdr_core, lip_analysis
        print(f"  Default lambda: {fdr_core.INIT_LAMBDA}")
        print(f"  Default alpha: {fdr_core.INIT_ALPHA}")
        print(f"  alpha_inf grid: {lip_analysis.INIT_TGRID_POINTS} points "
              f"from {lip_analysis.INIT_TGRID_MIN:g}")
        return True
    except Exception as e:
        print(f"  Error checking configuration: {e}")
        return False

def test_platform():
    """Test platform detection"""
    print("\nPlatform information...")
    import platform
    print(f"  System: {platform.system()}")
    print(f"  Machine: {platform.machine()}")
    print(f"  Python: {platform.python_version()}")
    return True

def test_numerics():
    """Test numpy / scipy stack"""
    print("\nChecking numerical stack...")
    try:
        import numpy as np
        import scipy
        from SpatialFDR import beta_median_cdf
        value = beta_median_cdf(5, 0.8)
        print(f"  numpy {np.__version__}, scipy {scipy.__version__}")
        print(f"  Beta(3,3) CDF at 0.8: {value:.5f} (expected 0.94208)")
        return abs(value - 0.94208) < 1e-9
    except Exception as e:
        print(f"  Numerical stack error: {e}")
        return False

def test_table_value():
    """Test the closed-form alpha_inf"""
    print("\nComputing alpha_inf for the exponential model...")
    try:
        import math
        from SpatialFDR import alpha_inf_exponential
        a_fdr = alpha_inf_exponential(math.log(8), 0.1, 0.84, "fdr")
        a_fdrl = alpha_inf_exponential(math.log(8), 0.1, 0.84, "fdrl_k5")
        print(f"  C=log(8): FDR {a_fdr:.4f}, FDR_L {a_fdrl:.4f}")
        return f"{a_fdr:.4f}" == "0.4130" and f"{a_fdrl:.4f}" == "0.0103"
    except Exception as e:
        print(f"  alpha_inf error: {e}")
        return False

def test_terminal():
    """Test terminal output libraries"""
    print("\nChecking terminal libraries...")
    try:
        import colorama  # noqa: F401
        import halo  # noqa: F401
        print("  colorama and halo available")
        return True
    except ImportError as e:
        print(f"  Terminal library missing: {e}")
        return False

def main():
    print("=" * 50)
    print("SpatialFDR Installation Test")
    print("=" * 50)

    tests = [
        ("Import Test", test_import),
        ("Default Config", test_defaults),
        ("Platform Check", test_platform),
        ("Numerical Stack", test_numerics),
        ("alpha_inf", test_table_value),
        ("Terminal Output", test_terminal),
    ]

    results = []
    for name, test_fn in tests:
        try:
            result = test_fn()
            results.append((name, result))
        except Exception as e:
            print(f"  {name} failed with exception: {e}")
            results.append((name, False))

    print("\n" + "=" * 50)
    print("Test Results:")
    all_passed = True
    for name, passed in results:
        status = "PASS" if passed else "FAIL"
        symbol = "+" if passed else "-"
        print(f"  [{symbol}] {name}: {status}")
        if not passed:
            all_passed = False

    print("=" * 50)
    if all_passed:
        print("All tests passed!")
        print("\nQuick start:")
        print("  spatialfdr alpha-inf --model exp --C log8")
    else:
        print("Some tests failed - check the errors above")
    print("=" * 50)

if __name__ == "__main__":
    main()
