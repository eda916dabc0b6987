from prior_lab.main import main

main()
