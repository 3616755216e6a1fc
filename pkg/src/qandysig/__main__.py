from qandysig.harness.cli import main

raise SystemExit(main())
