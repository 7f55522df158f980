import importlib
import subprocess
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent.parent))


def check_python_version():
    if sys.version_info < (3, 10):
        print("[FAIL] Python 3.10 or higher is required")
        print(f"       Current version: {sys.version}")
        return False
    print(f"[OK] Python version: {sys.version.split()[0]}")
    return True


def install_requirements():
    print("\nInstalling required packages...")
    try:
        subprocess.check_call([
            sys.executable, "-m", "pip", "install", "-r", "requirements.txt"
        ])
        print("[OK] All packages installed successfully")
        return True
    except subprocess.CalledProcessError as e:
        print(f"[FAIL] Error installing packages: {e}")
        return False


def check_packages():
    print("\nChecking packages...")
    all_present = True
    for module in ["numpy", "pandas", "sympy", "pydantic", "dotenv", "pytest", "hypothesis"]:
        try:
            mod = importlib.import_module(module)
            print(f"   [OK] {module} {getattr(mod, '__version__', '')}")
        except ImportError:
            print(f"   [MISSING] {module}")
            all_present = False
    return all_present


def check_configs():
    print("\nChecking campaign configs...")
    from backend.config import CONFIG_DIR
    from backend.campaigns import load_config
    from backend.exceptions import CliffordError

    all_valid = True
    for path in sorted(CONFIG_DIR.glob("*.json")):
        try:
            config = load_config(path)
            print(f"   [OK] {path.name} (Cl{tuple(config.signature)}, frame={config.frame.type})")
        except CliffordError as e:
            print(f"   [FAIL] {path.name}: {e}")
            all_valid = False
    return all_valid


def check_algebra():
    print("\nChecking the algebra kernel...")
    from backend.clifford_core import Multivector, Signature

    sig = Signature(1, 3)
    e12 = Multivector.blade(sig, 0b11)
    square = e12 * e12
    if square[0] == 1.0 and square.norm() == 1.0:
        print("   [OK] e^12 e^12 = +e in Cl(1,3)")
        return True
    print(f"   [FAIL] e^12 e^12 = {square}")
    return False


def create_directories():
    print("\nCreating directories...")
    from backend.config import OUTPUT_DIR

    if not OUTPUT_DIR.exists():
        OUTPUT_DIR.mkdir(parents=True)
        print(f"   [OK] Created {OUTPUT_DIR}/")
    else:
        print(f"   [OK] {OUTPUT_DIR}/ already exists")


def main():
    print("=" * 60)
    print("Clifford Yang-Mills toolkit - Setup")
    print("=" * 60)

    if not check_python_version():
        sys.exit(1)

    if "--skip-install" not in sys.argv and not install_requirements():
        print("\nSome packages failed to install. Please check errors above.")
        sys.exit(1)

    if not check_packages():
        sys.exit(1)

    create_directories()
    configs_ok = check_configs()
    algebra_ok = check_algebra()

    print("\n" + "=" * 60)
    print("Setup Summary")
    print("=" * 60)

    if configs_ok and algebra_ok:
        print("[OK] All checks passed! You're ready to go.")
        print("\nTo run a campaign:")
        print("   python main.py all --config configs/all_vector_gauge.json")
    else:
        print("[FAIL] Some checks failed, see above.")
        sys.exit(1)

    print("=" * 60)


if __name__ == "__main__":
    main()
