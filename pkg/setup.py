#!/usr/bin/env python3
"""
dbtag Setup Script
Creates the virtual environment, installs dependencies and runs the test suite
"""

import os
import subprocess
import sys
from pathlib import Path

PROJECT_DIR = "dbtag"


def run_command(command, cwd=None, check=True):
    """Run a shell command and handle errors"""
    try:
        print(f"Running: {command}")
        result = subprocess.run(
            command,
            shell=True,
            cwd=cwd,
            check=check,
            capture_output=True,
            text=True
        )
        if result.stdout:
            print(result.stdout)
        return result
    except subprocess.CalledProcessError as e:
        print(f"Error running command: {command}")
        print(f"Error output: {e.stderr or e.stdout}")
        if check:
            sys.exit(1)
        return e


def venv_tool(name):
    if os.name == 'nt':  # Windows
        return f'venv\\Scripts\\{name}'
    return f'venv/bin/{name}'


def check_requirements():
    """dbtag needs Python 3.9+"""
    if sys.version_info < (3, 9):
        print(f"❌ Python 3.9+ required, found {sys.version.split()[0]}")
        sys.exit(1)
    print(f"✓ Python {sys.version.split()[0]}")


def setup_environment():
    """Create the virtual environment and install dependencies"""
    print("\n🔧 Setting up dbtag...")

    if not os.path.exists(f'{PROJECT_DIR}/venv'):
        run_command(f'"{sys.executable}" -m venv venv', cwd=PROJECT_DIR)

    run_command(f'{venv_tool("pip")} install --upgrade pip', cwd=PROJECT_DIR)
    run_command(f'{venv_tool("pip")} install -r requirements.txt', cwd=PROJECT_DIR)

    print("✅ Dependencies installed!")


def create_env_file():
    """Write a default .env so DBTAG_* settings are easy to find"""
    env_path = Path(PROJECT_DIR) / '.env'
    if env_path.exists():
        return
    env_path.write_text(
        "DBTAG_LOG=warn\n"
        "DBTAG_MAX_SPAN=8\n"
        "DBTAG_JOBS=-1\n"
        "DBTAG_SQL_DIALECT=sqlite\n"
    )
    print(f"✅ Created {env_path}")


def run_tests():
    """Run the pytest suite inside the virtual environment"""
    print("\n🔍 Running tests...")
    result = run_command(f'{venv_tool("python")} -m pytest -q', cwd=PROJECT_DIR, check=False)
    return result.returncode == 0


def print_next_steps():
    """Print instructions for running the pipeline"""
    python_cmd = venv_tool("python")
    print("\n" + "=" * 60)
    print("🎉 SETUP COMPLETE!")
    print("=" * 60)
    print("\n📋 Next Steps:")
    print(f"\n   cd {PROJECT_DIR}")
    print(f"   {python_cmd} main.py synth --n 100 --out corpus.jsonl")
    print(f"   {python_cmd} main.py calibrate --gold gold.jsonl --out calibration.json")
    print(f"   {python_cmd} main.py augment corpus.jsonl --calibration calibration.json --out augmented.jsonl")
    print(f"   {python_cmd} main.py stats augmented.jsonl --reference")
    print("\n📚 Documentation:")
    print("   - Project README: ./README.md")
    print(f"   - CLI reference: ./{PROJECT_DIR}/README.md")


def main():
    """Main setup function"""
    print("🚀 dbtag Setup Script")
    print("=" * 40)

    try:
        check_requirements()
        setup_environment()
        create_env_file()

        if run_tests():
            print_next_steps()
        else:
            print("\n❌ Tests failed. Please check the output above.")
            sys.exit(1)

    except KeyboardInterrupt:
        print("\n\n⚠️  Setup interrupted by user")
        sys.exit(1)
    except Exception as e:
        print(f"\n❌ Setup failed with error: {e}")
        sys.exit(1)


if __name__ == "__main__":
    main()
